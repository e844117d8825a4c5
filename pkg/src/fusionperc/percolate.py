"""Newman-Ziff Monte Carlo for bond and site-bond percolation.

Each trial adds bonds one at a time in a uniformly random order, merging
clusters with a union-find that also tracks every node's displacement from
its root, so a bond closing a loop with nonzero net winding marks its
cluster as wrapping.  The per-bond-count (microcanonical) record is then
convolved with binomial weights onto a fixed grid of bond probabilities.
Trials are independent and reduced in trial order, so results do not depend
on how many worker processes ran them.
"""

from __future__ import annotations

import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _nz
from .lattice import Lattice

log = logging.getLogger(__name__)

ORDER_PARAMS = ("largest_fraction", "colored_largest_fraction", "wrap_probability")
# "mean" averages the per-axis wrapping probabilities; "axisN" picks one axis
WRAP_RULES = ("mean", "any", "all", "axisN")
DEFAULT_WRAP_RULE = "mean"
DEFAULT_GRID = 1e-3
DEFAULT_SEED = 1729
CUTOFF = 1e-18


class SweepError(ValueError):
    """Raised for invalid sweep requests (zero trials, bad probabilities, oversize)."""


def p_grid(resolution: float = DEFAULT_GRID) -> np.ndarray:
    if not 0 < resolution <= 0.5:
        raise SweepError(f"grid resolution must be in (0, 0.5], got {resolution}")
    steps = int(round(1.0 / resolution))
    return np.linspace(0.0, 1.0, steps + 1)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for trial ``index``; depends only on (seed, index)."""
    if seed < 0:
        raise SweepError("seed must be a nonnegative integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def wrap_names(dim: int) -> list[str]:
    return [f"wrap_axis{d}" for d in range(dim)] + ["wrap_any", "wrap_all"]


def observable_names(dim: int) -> list[str]:
    return ["largest_fraction", "colored_largest_fraction"] + wrap_names(dim)


# --------------------------------------------------------------------------
# curves


@dataclass
class SweepCurve:
    """Order parameters versus bond probability, with standard errors."""

    p: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    meta: dict
    samples: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def params(self) -> list[str]:
        return list(self.mean)

    def to_csv(self) -> str:
        meta = self.meta
        header = (
            f"# lattice={meta.get('lattice')} extents={meta.get('extents')} "
            f"trials={meta.get('trials')} seed={meta.get('seed')} q={meta.get('q')}"
        )
        cols = ["p"]
        for name in self.params:
            cols += [f"{name}_mean", f"{name}_stderr"]
        buf = io.StringIO()
        buf.write(header + "\n")
        buf.write(",".join(cols) + "\n")
        for i, p in enumerate(self.p):
            row = [p]
            for name in self.params:
                row += [self.mean[name][i], self.stderr[name][i]]
            buf.write(",".join(f"{x:.9g}" for x in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SweepCurve:
        lines = text.strip().splitlines()
        if not lines[0].startswith("#"):
            raise ValueError("missing metadata header")
        meta = {}
        for token in lines[0][1:].split():
            key, _, value = token.partition("=")
            meta[key] = value
        for key in ("trials", "seed"):
            if key in meta and meta[key] not in ("None", ""):
                meta[key] = int(meta[key])
        if meta.get("q") not in (None, "None"):
            meta["q"] = float(meta["q"])
        else:
            meta["q"] = None
        cols = lines[1].split(",")
        data = np.array([[float(x) for x in line.split(",")] for line in lines[2:]])
        mean, stderr = {}, {}
        for j, col in enumerate(cols[1:], start=1):
            if col.endswith("_mean"):
                mean[col[: -len("_mean")]] = data[:, j]
            elif col.endswith("_stderr"):
                stderr[col[: -len("_stderr")]] = data[:, j]
        return cls(data[:, 0], mean, stderr, meta)


# --------------------------------------------------------------------------
# trials


@dataclass(frozen=True)
class _Problem:
    edge_a: np.ndarray
    edge_b: np.ndarray
    edge_offset: np.ndarray
    colored: np.ndarray
    q: float
    site_mask: np.ndarray | None   # nodes subject to site occupation; None = all
    fixed: np.ndarray | None       # edges occupied whenever both ends are
    grid: np.ndarray


def _problem_from(lattice: Lattice, q, grid, site_mask=None, fixed=None) -> _Problem:
    return _Problem(
        edge_a=np.asarray(lattice.edge_a, dtype=np.int64),
        edge_b=np.asarray(lattice.edge_b, dtype=np.int64),
        edge_offset=np.asarray(lattice.edge_offset, dtype=np.int64),
        colored=np.asarray(lattice.colors) > 0,
        q=float(q),
        site_mask=None if site_mask is None else np.asarray(site_mask, dtype=bool),
        fixed=None if fixed is None else np.asarray(fixed, dtype=bool),
        grid=grid,
    )


def micro_trial(prob: _Problem, seed: int, index: int):
    """Run one trial; return (largest, colored_largest, wrap_first, merges, n_occupied)."""
    rng = trial_rng(seed, index)
    n_nodes = prob.colored.shape[0]
    n_edges = prob.edge_a.shape[0]
    # permutation first so that q = 1 reproduces the pure bond sweep exactly
    perm = rng.permutation(n_edges)
    if prob.q < 1.0 or prob.site_mask is not None:
        occupied = rng.random(n_nodes) < prob.q
        if prob.site_mask is not None:
            occupied |= ~prob.site_mask
        live = occupied[prob.edge_a] & occupied[prob.edge_b]
        perm = perm[live[perm]]
    else:
        occupied = np.ones(n_nodes, dtype=bool)
    n_pre = 0
    if prob.fixed is not None:
        fixed = prob.fixed[perm]
        perm = np.concatenate([perm[fixed], perm[~fixed]])
        n_pre = int(fixed.sum())
    n_sweep = perm.shape[0] - n_pre
    largest = np.empty(n_sweep + 1, dtype=np.int64)
    colored = np.empty(n_sweep + 1, dtype=np.int64)
    dim = prob.edge_offset.shape[1]
    wrap_first = np.empty(dim + 2, dtype=np.int64)
    merges = _nz.nz_sweep(
        prob.edge_a, prob.edge_b, prob.edge_offset, perm.astype(np.int64), n_pre,
        occupied, prob.colored, largest, colored, wrap_first,
    )
    return largest, colored, wrap_first, merges, int(occupied.sum())


def canonical_trial(prob: _Problem, seed: int, index: int) -> np.ndarray:
    """One trial's canonical curves, shape (n_observables, len(grid))."""
    largest, colored, wrap_first, _, _ = micro_trial(prob, seed, index)
    n_nodes = prob.colored.shape[0]
    curves = np.vstack([largest, colored]).astype(np.float64) / n_nodes
    dim = prob.edge_offset.shape[1]
    out_c = np.empty((2, prob.grid.shape[0]))
    out_s = np.empty((dim + 2, prob.grid.shape[0]))
    _nz.convolve_trial(prob.grid, curves, wrap_first, out_c, out_s, CUTOFF)
    return np.vstack([out_c, out_s])


_WORKER_PROBLEM: _Problem | None = None


def _init_worker(prob: _Problem) -> None:
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = prob


def _worker_chunk(args):
    seed, indices = args
    return [canonical_trial(_WORKER_PROBLEM, seed, i) for i in indices]


def run_trials(prob: _Problem, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """All trials' canonical curves stacked as (trials, n_observables, G)."""
    if trials < 1:
        raise SweepError("trials must be >= 1")
    if workers <= 1 or trials == 1:
        results = [canonical_trial(prob, seed, i) for i in range(trials)]
    else:
        chunks = np.array_split(np.arange(trials), min(workers, trials))
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(prob,)) as pool:
            parts = pool.map(_worker_chunk, [(seed, c.tolist()) for c in chunks])
            results = [r for part in parts for r in part]
    return np.stack(results)


def _resolve_params(order_params, dim: int, wrap_rule: str) -> list[tuple[str, list[str]]]:
    known = observable_names(dim)
    out = []
    for name in order_params:
        if name == "wrap_probability":
            out.append((name, _wrap_source(wrap_rule, dim)))
        elif name in known:
            out.append((name, [name]))
        else:
            raise SweepError(f"unknown order parameter {name!r}")
    return out


def _wrap_source(rule: str, dim: int) -> list[str]:
    if rule == "mean":
        return [f"wrap_axis{d}" for d in range(dim)]
    if rule in ("any", "all"):
        return [f"wrap_{rule}"]
    if rule.startswith("axis") and rule[4:].isdigit() and int(rule[4:]) < dim:
        return [f"wrap_{rule}"]
    raise SweepError(f"unknown wrap rule {rule!r}")


def _summarise(values: np.ndarray, lattice: Lattice, order_params, wrap_rule, meta, grid,
               keep_samples: bool) -> SweepCurve:
    names = observable_names(lattice.dim)
    trials = values.shape[0]
    mean, stderr, samples = {}, {}, {}
    for label, sources in _resolve_params(order_params, lattice.dim, wrap_rule):
        v = values[:, [names.index(s) for s in sources], :].mean(axis=1)
        mean[label] = v.mean(axis=0)
        if trials > 1:
            stderr[label] = v.std(axis=0, ddof=1) / np.sqrt(trials)
        else:
            stderr[label] = np.zeros_like(mean[label])
        if keep_samples:
            samples[label] = v
    return SweepCurve(grid, mean, stderr, meta, samples)


def _check_size(lattice: Lattice) -> None:
    # per trial: parent/size/colcount/wrap (4), disp (dim) and two records
    need = 8 * (lattice.n_nodes * (4 + lattice.dim) + 4 * lattice.n_edges)
    if need > 4 * 2**30:
        raise SweepError(f"lattice too large for one trial (~{need / 2**30:.1f} GiB)")


def nz_bond_sweep(lattice: Lattice, order_params=ORDER_PARAMS, trials: int = 100,
                  seed: int = DEFAULT_SEED, *, grid: float = DEFAULT_GRID, workers: int = 1,
                  wrap_rule: str = DEFAULT_WRAP_RULE, keep_samples: bool = False) -> SweepCurve:
    """Newman-Ziff bond sweep, averaged over ``trials`` independent orders."""
    return nz_site_bond_sweep(lattice, 1.0, order_params, trials, seed, grid=grid,
                              workers=workers, wrap_rule=wrap_rule,
                              keep_samples=keep_samples)


def nz_site_bond_sweep(lattice: Lattice, q: float, order_params=ORDER_PARAMS,
                       trials: int = 100, seed: int = DEFAULT_SEED, *, grid: float = DEFAULT_GRID,
                       workers: int = 1, wrap_rule: str = DEFAULT_WRAP_RULE,
                       site_mask=None, fixed_bonds=None,
                       keep_samples: bool = False) -> SweepCurve:
    """Site-bond sweep: sites occupied with probability ``q``, bonds swept in ``p``.

    ``site_mask`` restricts site occupation to the masked nodes (others are
    always occupied) and ``fixed_bonds`` marks bonds that are present whenever
    both their ends are occupied; bond probability then applies only to the
    remaining bonds.  Together they express modified site-bond problems in
    which a vacant site still lets some bonds through.
    """
    if not 0.0 <= q <= 1.0:
        raise SweepError(f"q must be in [0, 1], got {q}")
    _check_size(lattice)
    g = p_grid(grid)
    _resolve_params(order_params, lattice.dim, wrap_rule)
    prob = _problem_from(lattice, q, g, site_mask, fixed_bonds)
    values = run_trials(prob, trials, seed, workers)
    meta = {
        "lattice": lattice.name,
        "extents": lattice.label,
        "trials": trials,
        "seed": seed,
        "q": q,
    }
    return _summarise(values, lattice, order_params, wrap_rule, meta, g, keep_samples)


# --------------------------------------------------------------------------
# single instances


@dataclass
class OutcomeInstance:
    lattice: Lattice
    bonds: np.ndarray
    sites: np.ndarray
    p: float
    q: float
    seed: int

    def __post_init__(self) -> None:
        if self.bonds.shape != (self.lattice.n_edges,):
            raise ValueError("bond occupancy must match the lattice edge count")
        if self.sites.shape != (self.lattice.n_nodes,):
            raise ValueError("site occupancy must match the lattice node count")


@dataclass
class ComponentStats:
    sizes: np.ndarray
    colored: np.ndarray
    wraps: np.ndarray          # (n_components, dim) booleans
    largest: int
    labels: np.ndarray         # component index per node, -1 for vacant sites
    merges: int

    @property
    def n_components(self) -> int:
        return int(self.sizes.shape[0])

    def wrapping(self) -> np.ndarray:
        """Per-dimension flag: does any component wrap."""
        return self.wraps.any(axis=0)


def sample_instance(lattice: Lattice, p: float, q: float = 1.0, seed: int = 0) -> OutcomeInstance:
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise SweepError("p and q must be in [0, 1]")
    rng = np.random.default_rng(seed)
    bonds = rng.random(lattice.n_edges) < p
    sites = rng.random(lattice.n_nodes) < q
    return OutcomeInstance(lattice, bonds, sites, p, q, seed)


def component_stats(instance: OutcomeInstance) -> ComponentStats:
    lat = instance.lattice
    ea = np.asarray(lat.edge_a, dtype=np.int64)
    eb = np.asarray(lat.edge_b, dtype=np.int64)
    sites = np.asarray(instance.sites, dtype=bool)
    live = np.asarray(instance.bonds, dtype=bool) & sites[ea] & sites[eb]
    edges = np.flatnonzero(live).astype(np.int64)
    roots = np.empty(lat.n_nodes, dtype=np.int64)
    masks = np.empty(lat.n_nodes, dtype=np.int64)
    merges = _nz.component_pass(ea, eb, np.asarray(lat.edge_offset, dtype=np.int64), edges,
                                sites, np.asarray(lat.colors) > 0, roots, masks)
    occupied_roots = roots[sites]
    uniq, labels_occ = np.unique(occupied_roots, return_inverse=True)
    labels = np.full(lat.n_nodes, -1, dtype=np.int64)
    labels[sites] = labels_occ
    sizes = np.bincount(labels_occ, minlength=uniq.size)
    colored = np.bincount(labels_occ, weights=(np.asarray(lat.colors)[sites] > 0),
                          minlength=uniq.size).astype(np.int64)
    bits = masks[uniq]
    wraps = ((bits[:, None] >> np.arange(lat.dim)) & 1).astype(bool)
    largest = int(np.argmax(sizes)) if sizes.size else -1
    return ComponentStats(sizes, colored, wraps, largest, labels, merges)
