"""Geometry and topology of the hexagonally packed 32-cell sensor array.

The receiver finger carries 8 rows of 4 photodiode cells.  Odd rows are
shifted by half a column pitch, giving a hexagonal packing stretched to
span the 38.0 x 30.0 mm sensorised area.  Electrically a cell is addressed
by a 3-bit selector code (the row) routed to one of four analog channels
(the column).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

DEMUX_CODES = 8
ANALOG_PINS = 4

# Advertised cell density (cells per cm^2).  The 38 x 30 mm centre extent
# implies 2.81 /cm^2 instead; the geometry below follows the extents and
# this figure is kept as metadata only.
NOMINAL_DENSITY_PER_CM2 = 3.21


class ZeroDimension(ValueError):
    """Grid with zero rows or columns."""


class AddressRange(ValueError):
    """(code, pin) outside the readout address space."""


class CellId(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GridSpec:
    """Cell layout parameters.

    ``pitch_x`` and ``pitch_y`` are centre-to-centre distances in mm;
    ``odd_row_offset`` is the lateral shift of odd rows as a fraction of
    ``pitch_x``.  Defaults reproduce the 32-cell fingertip.
    """

    rows: int = 8
    cols: int = 4
    pitch_x: float = 38.0 / 3.5
    pitch_y: float = 30.0 / 7.0
    odd_row_offset: float = 0.5

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ZeroDimension(f"grid must be non-empty, got {self.rows}x{self.cols}")
        if self.pitch_x <= 0 or self.pitch_y <= 0:
            raise ValueError("pitches must be positive")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def index_of(self, cell: CellId) -> int:
        return cell.row * self.cols + cell.col

    def cell_at(self, index: int) -> CellId:
        if not 0 <= index < self.n_cells:
            raise IndexError(f"cell index {index} out of range")
        return CellId(index // self.cols, index % self.cols)

    def to_config(self) -> dict[str, float]:
        """Flat key/value form used by config files and the CLI ``--grid``."""
        return {
            "rows": self.rows,
            "cols": self.cols,
            "pitch_x_mm": self.pitch_x,
            "pitch_y_mm": self.pitch_y,
            "odd_row_offset": self.odd_row_offset,
        }

    @classmethod
    def from_config(cls, values: dict) -> "GridSpec":
        return cls(
            rows=int(values.get("rows", 8)),
            cols=int(values.get("cols", 4)),
            pitch_x=float(values.get("pitch_x_mm", 38.0 / 3.5)),
            pitch_y=float(values.get("pitch_y_mm", 30.0 / 7.0)),
            odd_row_offset=float(values.get("odd_row_offset", 0.5)),
        )


@dataclass(frozen=True)
class SensorGrid:
    """Immutable cell centres plus lattice adjacency for one GridSpec."""

    spec: GridSpec
    centres: np.ndarray = field(repr=False)          # (n, 2) mm, read-only
    neighbors: tuple[frozenset[int], ...] = field(repr=False)

    @property
    def n_cells(self) -> int:
        return self.spec.n_cells

    def centre(self, index: int) -> tuple[float, float]:
        x, y = self.centres[index]
        return float(x), float(y)

    def cell_at(self, index: int) -> CellId:
        return self.spec.cell_at(index)

    def index_of(self, cell: CellId) -> int:
        return self.spec.index_of(cell)

    def neighbor_pairs(self) -> tuple[tuple[int, int], ...]:
        """All unordered adjacent index pairs, each listed once."""
        pairs = []
        for i, adj in enumerate(self.neighbors):
            pairs.extend((i, j) for j in adj if i < j)
        return tuple(sorted(pairs))

    @property
    def bounding_box(self) -> tuple[float, float]:
        """(x extent, y extent) of the cell centres in mm."""
        mins = self.centres.min(axis=0)
        maxs = self.centres.max(axis=0)
        return float(maxs[0] - mins[0]), float(maxs[1] - mins[1])

    @property
    def footprint_bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the union of cell footprints."""
        hx, hy = self.spec.pitch_x / 2.0, self.spec.pitch_y / 2.0
        mins = self.centres.min(axis=0)
        maxs = self.centres.max(axis=0)
        return (
            float(mins[0] - hx),
            float(mins[1] - hy),
            float(maxs[0] + hx),
            float(maxs[1] + hy),
        )


def _lattice_neighbors(spec: GridSpec, row: int, col: int) -> frozenset[int]:
    # East/west plus the two straddling cells in each adjacent row; odd rows
    # sit offset to the right, so the parity decides which columns straddle.
    candidates = [(row, col - 1), (row, col + 1)]
    shift = 1 if row % 2 else -1
    for r in (row - 1, row + 1):
        candidates.append((r, col))
        candidates.append((r, col + shift))
    out = set()
    for r, c in candidates:
        if 0 <= r < spec.rows and 0 <= c < spec.cols:
            out.add(r * spec.cols + c)
    return frozenset(out)


def build_grid(spec: GridSpec | None = None) -> SensorGrid:
    """Compute cell centres and neighbor sets for a grid spec.

    Centre of (row r, col c) is (c*pitch_x + odd_row_offset*pitch_x for odd
    r, r*pitch_y).  Neighbors are the lattice-adjacent cells: same-row
    east/west plus the two nearest cells in each adjacent row.
    """
    if spec is None:
        spec = GridSpec()
    centres = np.empty((spec.n_cells, 2), dtype=float)
    neighbors = []
    for row in range(spec.rows):
        x_shift = spec.odd_row_offset * spec.pitch_x if row % 2 else 0.0
        for col in range(spec.cols):
            i = row * spec.cols + col
            centres[i, 0] = col * spec.pitch_x + x_shift
            centres[i, 1] = row * spec.pitch_y
            neighbors.append(_lattice_neighbors(spec, row, col))
    centres.setflags(write=False)
    return SensorGrid(spec=spec, centres=centres, neighbors=tuple(neighbors))


@lru_cache(maxsize=8)
def _cached_grid(spec: GridSpec) -> SensorGrid:
    return build_grid(spec)


def default_grid() -> SensorGrid:
    """The 8x4 device grid (shared instance; SensorGrid is immutable)."""
    return _cached_grid(GridSpec())


def address_to_cell(code: int, pin: int, spec: GridSpec | None = None) -> CellId:
    """Map a readout address (DEMUX code, analog pin) to its cell.

    The bijection is direct: the selector code is the row, the analog
    channel the column.  Raises AddressRange outside 8 codes x 4 pins or
    outside the given spec's dimensions.
    """
    if spec is None:
        spec = GridSpec()
    if not (0 <= code < DEMUX_CODES and 0 <= pin < ANALOG_PINS):
        raise AddressRange(f"address ({code}, {pin}) outside {DEMUX_CODES}x{ANALOG_PINS}")
    if code >= spec.rows or pin >= spec.cols:
        raise AddressRange(f"address ({code}, {pin}) outside {spec.rows}x{spec.cols} grid")
    return CellId(row=code, col=pin)
