"""Unit cells of periodic graphs and their plain-text cell-file format.

A cell file looks like::

    dim 2; nodes 1; edges 2
    0 1 0 0
    0 0 1 0 generic
    0 0 0 1 generic

The header is followed by one ``id color x1..xD`` line per node and one
``a b o1..oD kind`` line per edge.  Edge ``(a, b, o)`` joins node ``a`` of
cell ``c`` to node ``b`` of cell ``c + o``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

EDGE_KINDS = ("generic", "green", "blue")

_HEADER = re.compile(r"^dim (\d+); nodes (\d+); edges (\d+)$")


class CellFormatError(ValueError):
    """Raised for malformed or inconsistent cell data."""


@dataclass(frozen=True)
class CellNode:
    id: int
    color: int
    position: tuple[float, ...]


@dataclass(frozen=True)
class CellEdge:
    a: int
    b: int
    offset: tuple[int, ...]
    kind: str = "generic"


@dataclass(frozen=True)
class UnitCell:
    dim: int
    nodes: tuple[CellNode, ...]
    edges: tuple[CellEdge, ...]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise CellFormatError(f"dimension must be positive, got {self.dim}")
        ids = [node.id for node in self.nodes]
        if ids != list(range(len(ids))):
            raise CellFormatError("node ids must be 0..K-1 in order")
        for node in self.nodes:
            if node.color < 0:
                raise CellFormatError(f"node {node.id} has negative color")
            if len(node.position) != self.dim:
                raise CellFormatError(f"node {node.id} position has wrong length")
        k = len(self.nodes)
        for edge in self.edges:
            if not (0 <= edge.a < k and 0 <= edge.b < k):
                raise CellFormatError(f"edge {edge} references a missing node")
            if len(edge.offset) != self.dim:
                raise CellFormatError(f"edge {edge} offset has wrong length")
            if edge.kind not in EDGE_KINDS:
                raise CellFormatError(f"unknown edge kind {edge.kind!r}")
            if edge.a == edge.b and not any(edge.offset):
                raise CellFormatError(f"edge {edge} is a zero-offset self-loop")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        """Degree of every cell node, counting periodic images."""
        deg = [0] * self.n_nodes
        for edge in self.edges:
            deg[edge.a] += 1
            deg[edge.b] += 1
        return deg

    def colors(self) -> list[int]:
        return [node.color for node in self.nodes]

    def to_text(self) -> str:
        lines = [f"dim {self.dim}; nodes {self.n_nodes}; edges {self.n_edges}"]
        for node in self.nodes:
            pos = " ".join(_fmt_float(x) for x in node.position)
            lines.append(f"{node.id} {node.color} {pos}")
        for edge in self.edges:
            off = " ".join(str(o) for o in edge.offset)
            lines.append(f"{edge.a} {edge.b} {off} {edge.kind}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> UnitCell:
        lines = text.splitlines()
        while lines and not lines[-1].strip():
            lines.pop()
        if not lines:
            raise CellFormatError("empty cell file")
        m = _HEADER.match(lines[0].strip())
        if m is None:
            raise CellFormatError(f"bad header line: {lines[0]!r}")
        dim, k, n_edges = (int(g) for g in m.groups())
        body = lines[1:]
        if len(body) != k + n_edges:
            raise CellFormatError(
                f"expected {k + n_edges} body lines, found {len(body)}"
            )
        nodes = []
        for line in body[:k]:
            fields = line.split()
            if len(fields) != 2 + dim:
                raise CellFormatError(f"bad node line: {line!r}")
            nodes.append(
                CellNode(
                    _parse_int(fields[0]),
                    _parse_int(fields[1]),
                    tuple(_parse_float(f) for f in fields[2:]),
                )
            )
        edges = []
        for line in body[k:]:
            fields = line.split()
            if len(fields) != 3 + dim:
                raise CellFormatError(f"bad edge line: {line!r}")
            edges.append(
                CellEdge(
                    _parse_int(fields[0]),
                    _parse_int(fields[1]),
                    tuple(_parse_int(f) for f in fields[2 : 2 + dim]),
                    fields[-1],
                )
            )
        return cls(dim, tuple(nodes), tuple(edges))

    @classmethod
    def load(cls, path: str | Path) -> UnitCell:
        return cls.from_text(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def _parse_int(token: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", token):
        raise CellFormatError(f"not an integer: {token!r}")
    return int(token)


def _parse_float(token: str) -> float:
    if not re.fullmatch(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?", token):
        raise CellFormatError(f"not a decimal number: {token!r}")
    return float(token)


def _fmt_float(x: float) -> str:
    return f"{x:.6g}"
