"""Generators for the built-in unit cells.

The shipped ``cells/*.cell`` files are the output of these functions; the
generators stay in the package so that higher-dimensional members of the
(10,3)-b family can be produced on demand and so the shipped data can be
regenerated and diffed.
"""

from __future__ import annotations

import itertools

from .unitcell import CellEdge, CellNode, UnitCell


def square() -> UnitCell:
    # 5-photon stars on a square grid: degree 4, one unmeasured photon.
    return UnitCell(
        2,
        (CellNode(0, 1, (0.0, 0.0)),),
        (CellEdge(0, 0, (1, 0)), CellEdge(0, 0, (0, 1))),
    )


def diamond() -> UnitCell:
    # fcc primitive cell, second atom at (1/4, 1/4, 1/4)
    return UnitCell(
        3,
        (CellNode(0, 1, (0.0, 0.0, 0.0)), CellNode(1, 1, (0.25, 0.25, 0.25))),
        (
            CellEdge(0, 1, (0, 0, 0)),
            CellEdge(1, 0, (1, 0, 0)),
            CellEdge(1, 0, (0, 1, 0)),
            CellEdge(1, 0, (0, 0, 1)),
        ),
    )


def two_layer_square() -> UnitCell:
    """Top layer of x-lines, bottom layer of y-lines, joined through a red node."""
    return UnitCell(
        2,
        (
            CellNode(0, 0, (0.0, 0.0)),
            CellNode(1, 1, (0.25, 0.25)),
            CellNode(2, 0, (0.5, 0.5)),
        ),
        (
            CellEdge(0, 0, (1, 0), "green"),
            CellEdge(2, 2, (0, 1), "green"),
            CellEdge(0, 1, (0, 0), "blue"),
            CellEdge(1, 2, (0, 0), "blue"),
        ),
    )


def b103(dim: int, modified: bool = True, stack_period: int = 2) -> UnitCell:
    """The (10,3)-b lattice and its generalisations to ``dim >= 3``.

    Layers of parallel line lattices fill the (x, y) plane and are stacked
    along the ``dim - 2`` remaining axes; a layer runs along x when the sum of
    its stacking coordinates is even and along y otherwise.  Along each line
    the inter-layer (blue) bonds cycle through +z1, +z2, ..., -z1, -z2, ...
    With ``modified`` set, a degree-2 red node sits at the centre of every
    blue bond.
    """
    if dim < 3:
        raise ValueError("the (10,3)-b family needs dim >= 3")
    if stack_period < 2 or stack_period % 2:
        raise ValueError("stack_period must be an even integer >= 2")
    k = dim - 2
    period = 2 * k
    stack_shape = (stack_period,) * k
    layers = list(itertools.product(*(range(s) for s in stack_shape)))
    index = {}
    nodes: list[CellNode] = []
    for zvec in layers:
        for x in range(period):
            for y in range(period):
                index[(x, y) + zvec] = len(nodes)
                pos = (x / period, y / period) + tuple(z / stack_period for z in zvec)
                nodes.append(CellNode(len(nodes), 0, pos))

    edges: list[CellEdge] = []
    reds: list[tuple[int, int, tuple[int, ...], tuple[float, ...]]] = []
    for zvec in layers:
        along_x = sum(zvec) % 2 == 0
        phase = 0 if along_x else k
        for x in range(period):
            for y in range(period):
                here = index[(x, y) + zvec]
                if along_x:
                    nx, ny, off = (x + 1) % period, y, (1 if x + 1 == period else 0, 0)
                else:
                    nx, ny, off = x, (y + 1) % period, (0, 1 if y + 1 == period else 0)
                edges.append(
                    CellEdge(here, index[(nx, ny) + zvec], off + (0,) * k, "green")
                )
                direction = (x + y + phase) % period
                if direction >= k:
                    continue  # negative directions are reached from the partner
                znext = list(zvec)
                znext[direction] += 1
                zoff = [0] * k
                if znext[direction] == stack_period:
                    znext[direction] = 0
                    zoff[direction] = 1
                there = index[(x, y) + tuple(znext)]
                mid = list(nodes[here].position)
                mid[2 + direction] += 0.5 / stack_period
                reds.append((here, there, (0, 0) + tuple(zoff), tuple(mid)))

    for here, there, off, mid in reds:
        if modified:
            red = len(nodes)
            nodes.append(CellNode(red, 1, mid))
            edges.append(CellEdge(here, red, (0,) * dim, "blue"))
            edges.append(CellEdge(red, there, off, "blue"))
        else:
            edges.append(CellEdge(here, there, off, "blue"))
    return UnitCell(dim, tuple(nodes), tuple(edges))


def single_copy(cell: UnitCell, probe: int = 4) -> UnitCell | None:
    """Restrict ``cell`` to one connected copy of the periodic net.

    Some cells hold several interpenetrating copies that never touch.  When
    every unit translation maps the copy through node 0 onto itself, that
    copy alone is a valid cell and is returned (renumbered).  A cell whose
    net is already connected comes back unchanged.  ``None`` means a unit
    translation swaps copies, so the cell has to be enlarged first.
    """
    k, dim = cell.n_nodes, cell.dim
    adj: list[list[tuple[int, tuple[int, ...]]]] = [[] for _ in range(k)]
    for e in cell.edges:
        adj[e.a].append((e.b, e.offset))
        adj[e.b].append((e.a, tuple(-o for o in e.offset)))
    start = ((0,) * dim, 0)
    seen = {start}
    todo = [start]
    while todo:
        c, v = todo.pop()
        for w, off in adj[v]:
            nxt = (tuple((ci + oi) % probe for ci, oi in zip(c, off)), w)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    if len(seen) == k * probe**dim:
        return cell
    members = {v for _, v in seen}
    cells_hit = {c for c, _ in seen}
    if len(seen) != len(members) * probe**dim or len(cells_hit) != probe**dim:
        return None
    if any((c, v) not in seen for c in cells_hit for v in members):
        return None
    keep = sorted(members)
    new_id = {v: i for i, v in enumerate(keep)}
    nodes = tuple(CellNode(new_id[v], cell.nodes[v].color, cell.nodes[v].position) for v in keep)
    edges = tuple(CellEdge(new_id[e.a], new_id[e.b], e.offset, e.kind)
                  for e in cell.edges if e.a in members)
    return UnitCell(dim, nodes, edges)


def b103_connected(dim: int, modified: bool = True, stack_period: int = 2) -> UnitCell:
    """One connected copy of the (10,3)-b net, doubling the stacking period if needed."""
    while stack_period <= 16:
        cell = single_copy(b103(dim, modified, stack_period))
        if cell is not None:
            return cell
        stack_period *= 2
    raise ValueError(f"no single-copy cell found for dim {dim}")


def brickwork_modified() -> UnitCell:
    """Brickwork (honeycomb) lattice with red nodes on half of its bonds.

    Rows of black nodes alternate between two kinds.  On even rows every
    row bond carries a red node, and so does every vertical bond leaving the
    row upward; odd rows and their upward bonds are left plain.  Vertical
    bonds alternate up and down along each row, which closes the bricks.
    """
    width = 4
    up = {0: (0, 2), 1: (1, 3)}
    nodes = [
        CellNode(row * width + col, 0, (col / width, row / 2))
        for row in range(2)
        for col in range(width)
    ]
    edges: list[CellEdge] = []

    def bond(a: int, b: int, off: tuple[int, int], kind: str, red_at=None) -> None:
        if red_at is None:
            edges.append(CellEdge(a, b, off, kind))
            return
        red = len(nodes)
        nodes.append(CellNode(red, 1, red_at))
        edges.append(CellEdge(a, red, (0, 0), kind))
        edges.append(CellEdge(red, b, off, kind))

    for row in range(2):
        decorated = row == 0
        for col in range(width):
            here = row * width + col
            there = row * width + (col + 1) % width
            mid = ((col + 0.5) / width, row / 2)
            bond(here, there, (1 if col == width - 1 else 0, 0), "green",
                 mid if decorated else None)
        for col in up[row]:
            here = row * width + col
            there = ((row + 1) % 2) * width + col
            mid = (col / width, row / 2 + 0.25)
            bond(here, there, (0, 1 if row == 1 else 0), "blue",
                 mid if decorated else None)
    return UnitCell(2, tuple(nodes), tuple(edges))
