"""Logical and physical lattices: unit cells, tiling, fusion layouts."""

from .build import (
    DEFAULT_EXTENTS,
    NAMES,
    Lattice,
    LatticeError,
    ValidationReport,
    bethe_tree,
    build_named,
    from_cell,
    unit_cell,
    validate,
)
from .layout import (
    FusionLayout,
    LayoutError,
    LogicalGraph,
    Microcluster,
    RelayGraph,
    layout_from_lattice,
    logical_from_layout,
    relay_graph_from_layout,
    two_layer_square_layout,
)
from .unitcell import CellEdge, CellFormatError, CellNode, UnitCell

__all__ = [
    "DEFAULT_EXTENTS",
    "NAMES",
    "CellEdge",
    "CellFormatError",
    "CellNode",
    "FusionLayout",
    "LayoutError",
    "LogicalGraph",
    "Microcluster",
    "RelayGraph",
    "Lattice",
    "LatticeError",
    "UnitCell",
    "ValidationReport",
    "bethe_tree",
    "build_named",
    "from_cell",
    "unit_cell",
    "layout_from_lattice",
    "logical_from_layout",
    "relay_graph_from_layout",
    "two_layer_square_layout",
    "validate",
]
