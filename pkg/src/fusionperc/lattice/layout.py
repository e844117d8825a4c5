"""Fusion layouts and the two graphs derived from them.

A layout is a set of microclusters (small graph states, one photon list and
an internal topology each) plus pairwise fusion attempts between photons of
different microclusters.  Collapsing every microcluster to a node gives the
logical graph, on which fusions are bonds.  Keeping every photon as a node
gives the relay graph: measured photons stay as relays and a successful
fusion adds a bond between its two photons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .build import Lattice, _frozen
from .unitcell import EDGE_KINDS

TOPOLOGIES = ("star", "clique", "line")


class LayoutError(ValueError):
    """Raised when a fusion layout breaks one of its invariants."""


@dataclass(frozen=True)
class Microcluster:
    photons: tuple[int, ...]
    topology: str = "star"

    def internal_edges(self) -> list[tuple[int, int]]:
        """Graph-state edges inside the microcluster (star centre = first photon)."""
        ph = self.photons
        if len(ph) < 2:
            return []
        if self.topology == "star":
            return [(ph[0], x) for x in ph[1:]]
        if self.topology == "line":
            return list(zip(ph[:-1], ph[1:]))
        return list(combinations(ph, 2))


@dataclass(frozen=True)
class FusionLayout:
    microclusters: tuple[Microcluster, ...]
    fusion_pairs: tuple[tuple[int, int], ...]

    def __init__(self, microclusters, fusion_pairs=()):
        mcs = tuple(
            m if isinstance(m, Microcluster) else Microcluster(tuple(m[0]), m[1])
            for m in microclusters
        )
        object.__setattr__(self, "microclusters", mcs)
        object.__setattr__(
            self, "fusion_pairs", tuple((int(a), int(b)) for a, b in fusion_pairs)
        )
        self._check()

    def _check(self) -> None:
        owner: dict[int, int] = {}
        for i, mc in enumerate(self.microclusters):
            if mc.topology not in TOPOLOGIES:
                raise LayoutError(f"microcluster {i}: unknown topology {mc.topology!r}")
            if not mc.photons:
                raise LayoutError(f"microcluster {i} is empty")
            for ph in mc.photons:
                if ph in owner:
                    raise LayoutError(f"photon {ph} appears in two microclusters")
                owner[ph] = i
        used: set[int] = set()
        for a, b in self.fusion_pairs:
            for ph in (a, b):
                if ph not in owner:
                    raise LayoutError(f"fusion references unknown photon {ph}")
                if ph in used:
                    raise LayoutError(f"photon {ph} is in more than one fusion")
                used.add(ph)
            if owner[a] == owner[b]:
                raise LayoutError(f"fusion ({a}, {b}) stays inside one microcluster")

    @property
    def photons(self) -> list[int]:
        return [ph for mc in self.microclusters for ph in mc.photons]

    def owner(self) -> dict[int, int]:
        return {ph: i for i, mc in enumerate(self.microclusters) for ph in mc.photons}

    def measured(self) -> set[int]:
        return {ph for pair in self.fusion_pairs for ph in pair}


def _components(n_nodes: int, pairs) -> np.ndarray:
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_nodes, n_nodes)
    )
    return connected_components(graph, directed=False)[1]


def _outcome_mask(outcomes, count: int) -> np.ndarray:
    if outcomes is None:
        return np.ones(count, dtype=bool)
    mask = np.asarray(outcomes, dtype=bool)
    if mask.shape != (count,):
        raise LayoutError(f"expected {count} fusion outcomes, got {mask.shape}")
    return mask


@dataclass(frozen=True)
class LogicalGraph:
    """Microclusters as nodes, one bond per fusion attempt, in layout order."""

    colors: tuple[int, ...]
    bonds: tuple[tuple[int, int], ...]
    n: int

    @property
    def n_nodes(self) -> int:
        return len(self.colors)

    def degrees(self) -> list[int]:
        deg = [0] * self.n_nodes
        for a, b in self.bonds:
            deg[a] += 1
            deg[b] += 1
        return deg

    def components(self, outcomes=None) -> np.ndarray:
        """Component label per node given per-bond success flags."""
        ok = _outcome_mask(outcomes, len(self.bonds))
        return _components(self.n_nodes, [b for b, s in zip(self.bonds, ok) if s])


def logical_from_layout(layout: FusionLayout, n: int) -> LogicalGraph:
    sizes = [len(mc.photons) for mc in layout.microclusters]
    if sizes and max(sizes) > n:
        raise LayoutError(f"microcluster with {max(sizes)} photons exceeds n={n}")
    owner = layout.owner()
    bonds = tuple((owner[a], owner[b]) for a, b in layout.fusion_pairs)
    fused = [0] * len(sizes)
    for a, b in bonds:
        fused[a] += 1
        fused[b] += 1
    colors = tuple(s - f for s, f in zip(sizes, fused))
    return LogicalGraph(colors, bonds, n)


@dataclass(frozen=True)
class RelayGraph:
    """Photon-level connectivity template.

    ``fixed`` edges come from the microcluster topologies and are always
    present; ``fusion`` edges are present when the corresponding fusion
    succeeds.
    """

    photons: tuple[int, ...]
    fixed: tuple[tuple[int, int], ...]
    fusion: tuple[tuple[int, int], ...]
    measured: frozenset[int] = field(default_factory=frozenset)

    def index(self) -> dict[int, int]:
        return {ph: i for i, ph in enumerate(self.photons)}

    @property
    def unmeasured(self) -> list[int]:
        return [ph for ph in self.photons if ph not in self.measured]

    def components(self, outcomes=None) -> dict[int, int]:
        """Component label per photon id given per-fusion success flags."""
        ok = _outcome_mask(outcomes, len(self.fusion))
        idx = self.index()
        pairs = [(idx[a], idx[b]) for a, b in self.fixed]
        pairs += [(idx[a], idx[b]) for (a, b), s in zip(self.fusion, ok) if s]
        labels = _components(len(self.photons), pairs)
        return {ph: int(labels[i]) for ph, i in idx.items()}

    def as_lattice(self, name: str = "relay") -> Lattice:
        """Fixed edges as ``blue``, fusion bonds as ``green``; black photons color 0."""
        idx = self.index()
        edges = list(self.fixed) + list(self.fusion)
        kinds = [EDGE_KINDS.index("blue")] * len(self.fixed)
        kinds += [EDGE_KINDS.index("green")] * len(self.fusion)
        colors = [0 if ph in self.measured else 1 for ph in self.photons]
        m = len(edges)
        return Lattice(
            name=name,
            extents=(),
            n=max([len(self.photons)] + [1]),
            colors=_frozen(np.array(colors, dtype=np.int64)),
            edge_a=_frozen(np.array([idx[a] for a, _ in edges], dtype=np.int64)),
            edge_b=_frozen(np.array([idx[b] for _, b in edges], dtype=np.int64)),
            edge_offset=_frozen(np.zeros((m, 1), dtype=np.int64)),
            edge_kind=_frozen(np.array(kinds, dtype=np.int8)),
            unit_cell=None,
            periodic=False,
        )


def relay_graph_from_layout(layout: FusionLayout) -> RelayGraph:
    fixed = tuple(e for mc in layout.microclusters for e in mc.internal_edges())
    return RelayGraph(
        photons=tuple(layout.photons),
        fixed=fixed,
        fusion=layout.fusion_pairs,
        measured=frozenset(layout.measured()),
    )


def layout_from_lattice(lattice: Lattice, topology: str = "star") -> FusionLayout:
    """One n-photon microcluster per node and one fusion per edge.

    Photon ids are ``node * n + slot``; unmeasured photons take the first
    ``color`` slots, so a star is centred on an unmeasured photon when there
    is one.
    """
    n = lattice.n
    deg = lattice.degrees()
    colors = np.asarray(lattice.colors)
    if (colors + deg > n).any():
        raise LayoutError("lattice has nodes with color + degree > n")
    next_slot = colors.astype(np.int64).copy()
    pairs = []
    for a, b in zip(lattice.edge_a.tolist(), lattice.edge_b.tolist()):
        pa = a * n + int(next_slot[a])
        next_slot[a] += 1
        pb = b * n + int(next_slot[b])
        next_slot[b] += 1
        pairs.append((pa, pb))
    mcs = [
        Microcluster(tuple(v * n + s for s in range(int(colors[v] + deg[v]))), topology)
        for v in range(lattice.n_nodes)
    ]
    return FusionLayout(mcs, pairs)


def two_layer_square_layout(extents) -> FusionLayout:
    """Three 3-photon clusters per site of a square grid (top, middle, bottom).

    Top clusters fuse along +x, bottom clusters along +y, and the middle
    cluster fuses once with each of the other two, keeping its first photon
    unmeasured.  The logical graph is the tiled two-layer cell, node for
    node in tiling order.
    """
    lx, ly = (int(e) for e in extents)
    if lx < 2 or ly < 2:
        raise LayoutError("extents must be >= 2")

    def ph(x: int, y: int, u: int, slot: int) -> int:
        return ((x * ly + y) * 3 + u) * 3 + slot

    mcs = []
    pairs = []
    for x in range(lx):
        for y in range(ly):
            for u in range(3):
                mcs.append(Microcluster(tuple(ph(x, y, u, s) for s in range(3)), "star"))
    # same edge order as the tiled cell: T-T (+x), B-B (+y), T-M, M-B
    for x in range(lx):
        for y in range(ly):
            pairs.append((ph(x, y, 0, 0), ph((x + 1) % lx, y, 0, 1)))
            pairs.append((ph(x, y, 2, 0), ph(x, (y + 1) % ly, 2, 1)))
            pairs.append((ph(x, y, 0, 2), ph(x, y, 1, 1)))
            pairs.append((ph(x, y, 1, 2), ph(x, y, 2, 2)))
    return FusionLayout(mcs, pairs)

