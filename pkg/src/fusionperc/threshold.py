"""Critical-probability estimates and site-bond boundaries.

``wrap_crossing`` reads off where the trial-averaged wrapping probability
reaches one half; ``two_size_crossing`` finds where the wrapping curves of
two system sizes cross.  Confidence intervals come from resampling trials.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import Lattice
from .percolate import (
    DEFAULT_GRID,
    DEFAULT_SEED,
    DEFAULT_WRAP_RULE,
    nz_site_bond_sweep,
)

log = logging.getLogger(__name__)

METHODS = ("wrap_crossing", "two_size_crossing")
BOOTSTRAP = 200
LEVEL = 0.5


class ThresholdError(RuntimeError):
    """The curves do not determine a threshold (no crossing, empty boundary)."""


@dataclass
class ThresholdEstimate:
    p_c: float
    ci_low: float
    ci_high: float
    method: str
    lattice: str
    extents: str
    trials: int
    seed: int
    low_confidence: bool = False
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _crossing(p: np.ndarray, y: np.ndarray, level: float = LEVEL) -> tuple[float, bool]:
    """First p where a nondecreasing curve reaches ``level``; (value, flat flag)."""
    above = np.flatnonzero(y >= level)
    if above.size == 0 or y[0] >= level:
        raise ThresholdError(
            f"curve does not cross {level} inside the grid (range {y.min():.3g}..{y.max():.3g})"
        )
    i = int(above[0])
    if y[i] == level:
        # flat stretch sitting on the level: take its midpoint
        j = i
        while j + 1 < y.size and y[j + 1] == level:
            j += 1
        if j > i:
            return 0.5 * (p[i] + p[j]), True
        return float(p[i]), False
    t = (level - y[i - 1]) / (y[i] - y[i - 1])
    return float(p[i - 1] + t * (p[i] - p[i - 1])), False


def _crossings_batch(p: np.ndarray, curves: np.ndarray, level: float = LEVEL) -> np.ndarray:
    """Crossing of each row of ``curves``; NaN where a row never crosses."""
    reach = curves >= level
    ok = reach.any(axis=1) & ~reach[:, 0]
    i = np.argmax(reach, axis=1)
    i = np.where(ok, i, 1)
    rows = np.arange(curves.shape[0])
    y0, y1 = curves[rows, i - 1], curves[rows, i]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(y1 > y0, (level - y0) / (y1 - y0), 0.0)
    out = p[i - 1] + t * (p[i] - p[i - 1])
    return np.where(ok, out, np.nan)


def _difference_crossing(p: np.ndarray, big: np.ndarray, small: np.ndarray,
                         hint: float) -> float:
    """Sign change of ``big - small`` (negative to positive) nearest ``hint``."""
    d = big - small
    active = (np.minimum(big, small) < 0.98) & (np.maximum(big, small) > 0.02)
    idx = np.flatnonzero(active[:-1] & active[1:] & (d[:-1] < 0) & (d[1:] >= 0))
    if idx.size == 0:
        raise ThresholdError("wrapping curves of the two sizes do not cross")
    cand = []
    for i in idx:
        t = -d[i] / (d[i + 1] - d[i])
        cand.append(p[i] + t * (p[i + 1] - p[i]))
    cand = np.array(cand)
    return float(cand[np.argmin(np.abs(cand - hint))])


def _bootstrap_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(2**31,)))


def _bootstrap_means(samples: np.ndarray, draws: int, rng: np.random.Generator) -> np.ndarray:
    t = samples.shape[0]
    idx = rng.integers(0, t, size=(draws, t))
    return np.stack([samples[row].mean(axis=0) for row in idx])


def _interval(center: float, values: np.ndarray) -> tuple[float, float]:
    values = values[np.isfinite(values)]
    if values.size == 0:
        return center, center
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(min(lo, center)), float(max(hi, center))


def largest_fraction_inflection(p: np.ndarray, largest: np.ndarray) -> float:
    """Steepest point of the largest-cluster fraction, a cruder threshold proxy."""
    slope = np.gradient(largest, p)
    return float(p[int(np.argmax(slope))])


def estimate_threshold(lattice: Lattice, trials: int = 200, seed: int = DEFAULT_SEED,
                       method: str = "wrap_crossing", *, grid: float = DEFAULT_GRID,
                       workers: int = 1, wrap_rule: str = DEFAULT_WRAP_RULE,
                       q: float = 1.0, companion: Lattice | None = None,
                       bootstrap: int = BOOTSTRAP, site_mask=None,
                       fixed_bonds=None) -> ThresholdEstimate:
    """Estimate p_c from Newman-Ziff sweeps.

    ``companion`` is the second size for ``two_size_crossing``; by default the
    same cell at half the extents (at least 2).
    """
    if method not in METHODS:
        raise ThresholdError(f"unknown method {method!r}; choose from {METHODS}")
    if not lattice.periodic:
        raise ThresholdError(f"{lattice.name} is not periodic; wrapping is undefined")
    params = ("wrap_probability", "largest_fraction")
    kw = dict(grid=grid, workers=workers, wrap_rule=wrap_rule, site_mask=site_mask,
              fixed_bonds=fixed_bonds, keep_samples=True)
    curve = nz_site_bond_sweep(lattice, q, params, trials, seed, **kw)
    p = curve.p
    wrap = curve.mean["wrap_probability"]
    p_c, flat = _crossing(p, wrap)
    rng = _bootstrap_rng(seed)
    diagnostics = {
        "largest_fraction_inflection": largest_fraction_inflection(p, curve.mean["largest_fraction"]),
        "wrap_rule": wrap_rule,
        "q": q,
    }
    extents = lattice.label
    if method == "wrap_crossing":
        boot = _crossings_batch(p, _bootstrap_means(curve.samples["wrap_probability"], bootstrap, rng))
        lo, hi = _interval(p_c, boot)
    else:
        if companion is None:
            companion = lattice.resized([max(2, e // 2) for e in lattice.extents])
        if site_mask is not None or fixed_bonds is not None:
            raise ThresholdError("two_size_crossing does not support masked site-bond problems")
        small = nz_site_bond_sweep(companion, q, params, trials, seed, **kw)
        diagnostics["wrap_crossing_large"] = p_c
        diagnostics["wrap_crossing_small"] = _crossing(p, small.mean["wrap_probability"])[0]
        hint = p_c
        p_c = _difference_crossing(p, wrap, small.mean["wrap_probability"], hint)
        flat = False
        big_b = _bootstrap_means(curve.samples["wrap_probability"], bootstrap, rng)
        small_b = _bootstrap_means(small.samples["wrap_probability"], bootstrap, rng)
        boot = []
        for b, s in zip(big_b, small_b):
            try:
                boot.append(_difference_crossing(p, b, s, hint))
            except ThresholdError:
                boot.append(np.nan)
        lo, hi = _interval(p_c, np.array(boot))
        extents = f"{lattice.label},{companion.label}"
    if not 0.0 < p_c < 1.0:
        raise ThresholdError(f"estimated threshold {p_c} outside (0, 1)")
    return ThresholdEstimate(
        p_c=p_c, ci_low=lo, ci_high=hi, method=method, lattice=lattice.name,
        extents=extents, trials=trials, seed=seed, low_confidence=flat,
        diagnostics=diagnostics,
    )


@dataclass
class Boundary:
    q: np.ndarray
    p_c: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    lattice: str
    extents: str
    trials: int
    seed: int
    skipped: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.q.shape[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("q,p_c,ci_low,ci_high\n")
        for row in zip(self.q, self.p_c, self.ci_low, self.ci_high):
            buf.write(",".join(f"{x:.9g}" for x in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "lattice": self.lattice,
            "extents": self.extents,
            "method": "wrap_crossing",
            "trials": self.trials,
            "seed": self.seed,
            "points": [
                {"q": float(q), "p_c": float(p), "ci_low": float(lo), "ci_high": float(hi)}
                for q, p, lo, hi in zip(self.q, self.p_c, self.ci_low, self.ci_high)
            ],
            "skipped_q": [float(q) for q in self.skipped],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_csv(cls, text: str, lattice: str = "?", extents: str = "?",
                 trials: int = 0, seed: int = 0) -> Boundary:
        lines = [ln for ln in text.strip().splitlines() if ln and not ln.startswith("#")]
        if lines[0].replace(" ", "") != "q,p_c,ci_low,ci_high":
            raise ValueError("not a boundary CSV")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, 4)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], lattice, extents, trials, seed)


def trace_boundary(lattice: Lattice, q_grid, trials: int = 100, seed: int = DEFAULT_SEED,
                   *, grid: float = DEFAULT_GRID, workers: int = 1,
                   wrap_rule: str = DEFAULT_WRAP_RULE, site_mask=None,
                   fixed_bonds=None, bootstrap: int = BOOTSTRAP) -> Boundary:
    """p_c(q) over ``q_grid``; q values without a crossing are skipped.

    Every q uses the same master seed, so neighbouring points share their
    random bond orders and the traced curve is smoother than independent
    sampling would give.
    """
    qs, pcs, los, his, skipped = [], [], [], [], []
    for q in sorted(float(x) for x in q_grid):
        if not 0.0 < q <= 1.0:
            raise ThresholdError(f"q must be in (0, 1], got {q}")
        try:
            est = estimate_threshold(lattice, trials, seed, "wrap_crossing", grid=grid,
                                     workers=workers, wrap_rule=wrap_rule, q=q,
                                     bootstrap=bootstrap, site_mask=site_mask,
                                     fixed_bonds=fixed_bonds)
        except ThresholdError as exc:
            log.info("q=%g skipped: %s", q, exc)
            skipped.append(q)
            continue
        qs.append(q)
        pcs.append(est.p_c)
        los.append(est.ci_low)
        his.append(est.ci_high)
    if not qs:
        raise ThresholdError("no q in the grid admits percolation")
    return Boundary(np.array(qs), np.array(pcs), np.array(los), np.array(his),
                    lattice.name, lattice.label, trials, seed, skipped)


@dataclass
class Intersection:
    p: float
    q: float
    p_low: float
    p_high: float

    def __iter__(self):
        return iter((self.p, self.q))


def _intersect_curve(q: np.ndarray, pc: np.ndarray, k: int) -> float:
    # h(q) = p_c(q)^k - q falls from positive to negative as q grows
    h = pc**k - q
    if h[-1] > 0 or h[0] < 0:
        raise ThresholdError(f"q = p^{k} does not cross the boundary inside q in [{q[0]}, {q[-1]}]")
    i = int(np.flatnonzero(h <= 0)[0])
    if i == 0 or h[i] == 0:
        return float(pc[i])
    lo, hi = 0.0, 1.0
    for _ in range(200):
        t = 0.5 * (lo + hi)
        qq = q[i - 1] + t * (q[i] - q[i - 1])
        pp = pc[i - 1] + t * (pc[i] - pc[i - 1])
        if pp**k - qq > 0:
            lo = t
        else:
            hi = t
    return float(pc[i - 1] + hi * (pc[i] - pc[i - 1]))


def intersect(boundary: Boundary, k: int) -> Intersection:
    """Crossing of the interpolated boundary with the curve q = p^k.

    k = 0 stands for the line q = 1 and returns the pure-bond threshold.
    """
    if len(boundary) == 0:
        raise ThresholdError("empty boundary")
    if k < 0:
        raise ThresholdError("k must be >= 0")
    order = np.argsort(boundary.q)
    q = boundary.q[order]
    if k == 0:
        if q[-1] != 1.0:
            raise ThresholdError("boundary has no q = 1 point")
        j = order[-1]
        return Intersection(float(boundary.p_c[j]), 1.0,
                            float(boundary.ci_low[j]), float(boundary.ci_high[j]))
    p = _intersect_curve(q, boundary.p_c[order], k)
    bounds = [p]
    for band in (boundary.ci_low[order], boundary.ci_high[order]):
        try:
            bounds.append(_intersect_curve(q, band, k))
        except ThresholdError:
            pass
    return Intersection(p, p**k, min(bounds), max(bounds))
