"""Finite periodic lattices instantiated from unit cells."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import cells
from .unitcell import EDGE_KINDS, UnitCell


class LatticeError(ValueError):
    """Raised for unknown lattice names and invalid extents."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Lattice:
    """A finite graph with node colors, edge kinds and per-edge cell offsets.

    ``edge_offset[e]`` is the unit-cell displacement travelled when walking
    edge ``e`` from ``edge_a[e]`` to ``edge_b[e]``.  Summed around a closed
    loop it is zero unless the loop winds around the torus, which is what the
    percolation engine uses for wrapping detection.  Non-periodic graphs carry
    all-zero offsets.
    """

    name: str
    extents: tuple[int, ...]
    n: int
    colors: np.ndarray
    edge_a: np.ndarray
    edge_b: np.ndarray
    edge_offset: np.ndarray
    edge_kind: np.ndarray
    unit_cell: UnitCell | None = None
    periodic: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.colors.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edge_a.shape[0])

    @property
    def dim(self) -> int:
        return int(self.edge_offset.shape[1])

    @property
    def label(self) -> str:
        return "x".join(str(e) for e in self.extents)

    def degrees(self) -> np.ndarray:
        return np.bincount(
            np.concatenate([self.edge_a, self.edge_b]), minlength=self.n_nodes
        )

    def node_index(self, cell: tuple[int, ...], unit_node: int) -> int:
        """Global index of ``unit_node`` in ``cell``."""
        if self.unit_cell is None:
            raise LatticeError(f"{self.name} has no unit cell")
        c = np.ravel_multi_index(tuple(int(x) for x in cell), self.extents)
        return int(c) * self.unit_cell.n_nodes + unit_node

    def edge_wraps(self) -> np.ndarray:
        """Boolean (M, D) array: does the edge cross the boundary in each dimension."""
        if self.unit_cell is None:
            return np.zeros(self.edge_offset.shape, dtype=bool)
        k = self.unit_cell.n_nodes
        cell = np.array(np.unravel_index(self.edge_a // k, self.extents)).T
        return (cell + self.edge_offset >= np.array(self.extents)) | (
            cell + self.edge_offset < 0
        )

    def kind_names(self) -> list[str]:
        return [EDGE_KINDS[i] for i in self.edge_kind]

    def resized(self, extents) -> Lattice:
        if self.unit_cell is None:
            raise LatticeError(f"{self.name} cannot be resized")
        return from_cell(self.unit_cell, extents, name=self.name, n=self.n)

    def neighbours(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for a, b in zip(self.edge_a.tolist(), self.edge_b.tolist()):
            adj[a].append(b)
            adj[b].append(a)
        return adj


def from_cell(cell: UnitCell, extents, name: str = "custom", n: int | None = None) -> Lattice:
    """Tile ``cell`` periodically over ``extents`` cells."""
    extents = tuple(int(e) for e in extents)
    if len(extents) != cell.dim:
        raise LatticeError(
            f"{name} is {cell.dim}-dimensional, got {len(extents)} extents"
        )
    if any(e < 2 for e in extents):
        raise LatticeError(f"every extent must be >= 2, got {extents}")
    k = cell.n_nodes
    n_cells = int(np.prod(extents))
    coords = np.indices(extents).reshape(cell.dim, -1).T
    ext = np.array(extents)
    cell_ids = np.arange(n_cells)

    m = cell.n_edges
    edge_a = np.empty((n_cells, m), dtype=np.int64)
    edge_b = np.empty((n_cells, m), dtype=np.int64)
    for j, e in enumerate(cell.edges):
        target = (coords + np.array(e.offset)) % ext
        edge_a[:, j] = cell_ids * k + e.a
        edge_b[:, j] = np.ravel_multi_index(tuple(target.T), extents) * k + e.b
    offsets = np.array([e.offset for e in cell.edges], dtype=np.int64)
    kinds = np.array([EDGE_KINDS.index(e.kind) for e in cell.edges], dtype=np.int8)
    colors = np.tile(np.array(cell.colors(), dtype=np.int64), n_cells)
    if n is None:
        n = max(c + d for c, d in zip(cell.colors(), cell.degrees()))
    return Lattice(
        name=name,
        extents=extents,
        n=n,
        colors=_frozen(colors),
        edge_a=_frozen(edge_a.ravel()),
        edge_b=_frozen(edge_b.ravel()),
        edge_offset=_frozen(np.tile(offsets, (n_cells, 1))),
        edge_kind=_frozen(np.tile(kinds, n_cells)),
        unit_cell=cell,
        periodic=True,
    )


# name -> (file stem or generator, microcluster size)
_BUILTIN = {
    "square-2d": 5,
    "diamond-3d": 5,
    "two-layer-logical-square": 3,
    "brickwork-mod-2d": 3,
    "b103-standard-3d": 3,
    "b103-mod-3d": 3,
    "b103-mod-4d": 3,
}

# about 1e6 bonds (1e7 for the 4D lattice)
DEFAULT_EXTENTS = {
    "square-2d": (512, 512),
    "diamond-3d": (64, 64, 64),
    "two-layer-logical-square": (576, 576),
    "brickwork-mod-2d": (236, 236),
    # the (10,3)-b cells are four layers tall, so z takes half the cells
    "b103-standard-3d": (56, 56, 28),
    "b103-mod-3d": (50, 50, 25),
    "b103-mod-4d": (14, 14, 14, 14),
}

_B103 = re.compile(r"^b103-(mod|standard)-(\d+)d$")
_BETHE = re.compile(r"^bethe-tree\((\d+),\s*(\d+),\s*(\d+)\)$")

NAMES = tuple(_BUILTIN) + ("bethe-tree(n,g,depth)",)


@lru_cache(maxsize=None)
def unit_cell(name: str) -> UnitCell:
    """Shipped unit cell for a built-in name (or a generated (10,3)-b cell)."""
    if name in _BUILTIN:
        text = resources.files(__package__).joinpath("cells", f"{name}.cell").read_text()
        return UnitCell.from_text(text)
    m = _B103.match(name)
    if m is not None:
        dim = int(m.group(2))
        if dim < 3:
            raise LatticeError(f"unknown lattice {name!r}")
        return cells.b103_connected(dim, modified=m.group(1) == "mod")
    raise LatticeError(f"unknown lattice {name!r}")


def build_named(name: str, extents=None, *, n: int | None = None,
                g: int | None = None, depth: int | None = None) -> Lattice:
    """Build a named lattice.

    Periodic lattices take ``extents`` (cells per dimension, each >= 2).  The
    Bethe-tree construction is requested either as ``"bethe-tree(n,g,depth)"``
    or as ``"bethe-tree"`` with keyword arguments.
    """
    m = _BETHE.match(name)
    if m is not None:
        n, g, depth = (int(x) for x in m.groups())
        name = "bethe-tree"
    if name == "bethe-tree":
        if n is None or g is None or depth is None:
            raise LatticeError("bethe-tree needs n, g and depth")
        return bethe_tree(n, g, depth)
    if extents is None:
        if name not in DEFAULT_EXTENTS:
            raise LatticeError(f"{name} needs extents")
        extents = DEFAULT_EXTENTS[name]
    cell = unit_cell(name)
    size = _BUILTIN.get(name, 3)
    return from_cell(cell, extents, name=name, n=size)


def bethe_tree(n: int, g: int, depth: int) -> Lattice:
    """Finite periodic-generation tree approaching the 1/(n-1) threshold.

    The root is an unmeasured node with n-1 children.  Every unmeasured
    generation is followed by ``g`` generations of black (degree n) nodes;
    non-root unmeasured nodes have n-2 children.  Generations 0..depth are
    built.
    """
    if n < 3:
        raise LatticeError("bethe-tree needs n >= 3")
    if g < 1:
        raise LatticeError("bethe-tree needs g >= 1")
    if depth < 0:
        raise LatticeError("depth must be nonnegative")
    colors = [1]
    generation = [0]
    parents: list[int] = []
    children: list[int] = []
    frontier = [0]
    for t in range(1, depth + 1):
        nxt = []
        for parent in frontier:
            pt = generation[parent]
            if pt == 0:
                count = n - 1
            elif pt % (g + 1) == 0:
                count = n - 2
            else:
                count = n - 1
            for _ in range(count):
                child = len(colors)
                colors.append(1 if t % (g + 1) == 0 else 0)
                generation.append(t)
                parents.append(parent)
                children.append(child)
                nxt.append(child)
        frontier = nxt
    m = len(parents)
    return Lattice(
        name="bethe-tree",
        extents=(),
        n=n,
        colors=_frozen(np.array(colors, dtype=np.int64)),
        edge_a=_frozen(np.array(parents, dtype=np.int64)),
        edge_b=_frozen(np.array(children, dtype=np.int64)),
        edge_offset=_frozen(np.zeros((m, 1), dtype=np.int64)),
        edge_kind=_frozen(np.zeros(m, dtype=np.int8)),
        unit_cell=None,
        periodic=False,
        meta={"g": g, "depth": depth, "generation": tuple(generation)},
    )


@dataclass
class ValidationReport:
    n_nodes: int
    n_edges: int
    degree_histogram: dict[int, int]
    color_census: dict[int, int]
    kind_census: dict[str, int]
    connected: bool
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(lattice: Lattice) -> ValidationReport:
    """Census and invariant check.  Never raises; failures land in the report."""
    violations = []
    n_nodes, n_edges = lattice.n_nodes, lattice.n_edges
    a, b = np.asarray(lattice.edge_a), np.asarray(lattice.edge_b)
    in_range = (a >= 0) & (a < n_nodes) & (b >= 0) & (b < n_nodes)
    if not in_range.all():
        bad = np.flatnonzero(~in_range)
        violations.append(f"{bad.size} edges reference missing nodes (first: edge {bad[0]})")
    a, b = a[in_range], b[in_range]
    offsets = np.asarray(lattice.edge_offset)[in_range]
    loops = (a == b) & ~offsets.any(axis=1)
    if loops.any():
        violations.append(f"{int(loops.sum())} zero-offset self-loops")

    deg = np.bincount(np.concatenate([a, b]), minlength=n_nodes) if n_nodes else np.zeros(0, int)
    degree_histogram = dict(sorted(Counter(deg.tolist()).items()))
    color_census = dict(sorted(Counter(np.asarray(lattice.colors).tolist()).items()))
    kind_census = dict(sorted(Counter(
        EDGE_KINDS[k] if 0 <= k < len(EDGE_KINDS) else f"?{k}"
        for k in np.asarray(lattice.edge_kind).tolist()).items()))

    cell = lattice.unit_cell
    if lattice.periodic and cell is not None:
        n_cells = int(np.prod(lattice.extents))
        if n_nodes != cell.n_nodes * n_cells:
            violations.append(f"node count {n_nodes} != {cell.n_nodes} x {n_cells}")
        if lattice.n_edges != cell.n_edges * n_cells:
            violations.append(f"edge count {lattice.n_edges} != {cell.n_edges} x {n_cells}")
        if deg.shape[0] == n_nodes and n_nodes == cell.n_nodes * n_cells:
            expected = np.tile(np.array(cell.degrees()), n_cells)
            if not np.array_equal(deg, expected):
                violations.append("node degrees differ from unit-cell degrees")
    colors = np.asarray(lattice.colors)
    if (colors < 0).any():
        violations.append("negative node colors")
    if deg.shape[0] == n_nodes:
        interior = np.ones(n_nodes, dtype=bool)
        if not lattice.periodic and "generation" in lattice.meta:
            gen = np.array(lattice.meta["generation"])
            interior = gen < lattice.meta["depth"]
        mismatch = interior & (colors + deg != lattice.n)
        if mismatch.any():
            violations.append(
                f"{int(mismatch.sum())} nodes violate color = n - degree (n={lattice.n})"
            )
        if (deg > lattice.n).any():
            violations.append(f"degree exceeds microcluster size n={lattice.n}")

    connected = False
    if n_nodes:
        graph = coo_matrix((np.ones(a.size), (a, b)), shape=(n_nodes, n_nodes))
        n_comp, _ = connected_components(graph, directed=False)
        connected = n_comp == 1
    return ValidationReport(
        n_nodes=n_nodes,
        n_edges=n_edges,
        degree_histogram=degree_histogram,
        color_census=color_census,
        kind_census=kind_census,
        connected=connected,
        violations=violations,
    )
