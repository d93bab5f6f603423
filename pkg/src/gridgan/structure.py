"""Grid-structured noise layouts.

A :class:`NoiseStructure` describes how the latent input of the generator is
split into independently sampled pieces: a per-group local code for every
cell of the input-tensor grid, a stack of shared codes tiled over the grid at
coarser scales (one grid-wide entry, per-quadrant entries, ...), and a
separate style code that never touches the input tensor.

Everything here is an immutable value object; all derived index tables are
computed once and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "StructureError",
    "SharedScale",
    "NoiseStructure",
    "CellSelection",
    "ScaleTarget",
    "StyleTarget",
    "STYLE",
    "SlotMask",
    "per_pixel_partition",
    "per_row_partition",
    "per_column_partition",
    "manual_partition",
]


class StructureError(ValueError):
    """Raised when a noise structure or a reference into one is invalid."""


def per_pixel_partition(grid_h: int, grid_w: int) -> tuple[tuple[int, ...], ...]:
    """Each cell is its own group (row-major numbering)."""
    return tuple(
        tuple(i * grid_w + j for j in range(grid_w)) for i in range(grid_h)
    )


def per_row_partition(grid_h: int, grid_w: int) -> tuple[tuple[int, ...], ...]:
    """All cells of a row share one group."""
    return tuple(tuple(i for _ in range(grid_w)) for i in range(grid_h))


def per_column_partition(grid_h: int, grid_w: int) -> tuple[tuple[int, ...], ...]:
    """All cells of a column share one group."""
    return tuple(tuple(j for j in range(grid_w)) for i in range(grid_h))


def manual_partition(cells: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Normalize a hand-drawn region map.

    Arbitrary region labels are accepted; they are renumbered so that group
    ids are contiguous from 0 in row-major first-occurrence order, which is
    the canonical numbering used everywhere else.
    """
    remap: dict[int, int] = {}
    rows = []
    for row in cells:
        out_row = []
        for label in row:
            if label not in remap:
                remap[label] = len(remap)
            out_row.append(remap[label])
        rows.append(tuple(out_row))
    return tuple(rows)


@dataclass(frozen=True)
class SharedScale:
    """One level of shared entries tiling the grid in ``rows x cols`` blocks."""

    rows: int
    cols: int
    dim: int

    def block_of(self, cell: tuple[int, int], grid_h: int, grid_w: int) -> tuple[int, int]:
        i, j = cell
        return (i * self.rows) // grid_h, (j * self.cols) // grid_w


def _normalize_scales(scales) -> tuple[SharedScale, ...]:
    out = []
    for s in scales:
        if isinstance(s, SharedScale):
            out.append(s)
        else:
            rows, cols, dim = s
            out.append(SharedScale(int(rows), int(cols), int(dim)))
    return tuple(out)


@dataclass(frozen=True)
class NoiseStructure:
    """Declarative layout of the structured latent space.

    Defaults follow the top-performing configuration: an 8x8 grid with an
    independent 16-dim code per cell, one grid-wide shared entry, a 2x2
    block-shared entry, and a 128-dim style code.
    """

    grid_h: int = 8
    grid_w: int = 8
    partition: tuple[tuple[int, ...], ...] | None = None
    local_dim: int = 16
    shared_scales: tuple[SharedScale, ...] = (SharedScale(1, 1, 1), SharedScale(2, 2, 1))
    style_dim: int = 128

    def __post_init__(self):
        if self.grid_h < 1 or self.grid_w < 1:
            raise StructureError(f"grid must be at least 1x1, got {self.grid_h}x{self.grid_w}")
        if self.local_dim < 1:
            raise StructureError(f"local_dim must be >= 1, got {self.local_dim}")
        if self.style_dim < 1:
            raise StructureError(f"style_dim must be >= 1, got {self.style_dim}")

        object.__setattr__(self, "shared_scales", _normalize_scales(self.shared_scales))
        prev_blocks = 0
        for s in self.shared_scales:
            if s.rows < 1 or s.cols < 1 or s.dim < 1:
                raise StructureError(f"invalid shared scale {s}")
            if self.grid_h % s.rows or self.grid_w % s.cols:
                raise StructureError(
                    f"scale {s.rows}x{s.cols} does not tile a "
                    f"{self.grid_h}x{self.grid_w} grid"
                )
            if s.rows * s.cols < prev_blocks:
                raise StructureError("shared_scales must be ordered coarse to fine")
            prev_blocks = s.rows * s.cols

        part = self.partition
        if part is None:
            part = per_pixel_partition(self.grid_h, self.grid_w)
        else:
            part = tuple(tuple(int(g) for g in row) for row in part)
        if len(part) != self.grid_h or any(len(row) != self.grid_w for row in part):
            raise StructureError(
                f"partition shape must be {self.grid_h}x{self.grid_w}"
            )
        ids = sorted({g for row in part for g in row})
        if ids != list(range(len(ids))):
            raise StructureError("group ids must be contiguous from 0")
        # Canonical numbering: first occurrence in row-major order.
        part = manual_partition(part)
        object.__setattr__(self, "partition", part)

    # ---- derived layout -------------------------------------------------

    @cached_property
    def n_cells(self) -> int:
        return self.grid_h * self.grid_w

    @cached_property
    def n_groups(self) -> int:
        return max(g for row in self.partition for g in row) + 1

    @cached_property
    def partition_array(self) -> np.ndarray:
        a = np.array(self.partition, dtype=np.int64)
        a.flags.writeable = False
        return a

    @cached_property
    def cells_of_group(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        buckets: list[list[tuple[int, int]]] = [[] for _ in range(self.n_groups)]
        for i in range(self.grid_h):
            for j in range(self.grid_w):
                buckets[self.partition[i][j]].append((i, j))
        return tuple(tuple(b) for b in buckets)

    @cached_property
    def scale_sizes(self) -> tuple[int, ...]:
        return tuple(s.rows * s.cols * s.dim for s in self.shared_scales)

    @cached_property
    def scale_offsets(self) -> tuple[int, ...]:
        off, out = 0, []
        for size in self.scale_sizes:
            out.append(off)
            off += size
        return tuple(out)

    @cached_property
    def local_offset(self) -> int:
        return sum(self.scale_sizes)

    @cached_property
    def spatial_len(self) -> int:
        """Length of the flattened spatially-variable code (shared + local)."""
        return self.local_offset + self.n_groups * self.local_dim

    @cached_property
    def total_len(self) -> int:
        """Length of the full flattened latent (style + spatially-variable)."""
        return self.style_dim + self.spatial_len

    @cached_property
    def cell_code_len(self) -> int:
        """Entries feeding one cell: one slice per shared scale plus the local code."""
        return sum(s.dim for s in self.shared_scales) + self.local_dim

    def check_cell(self, cell: tuple[int, int]) -> tuple[int, int]:
        i, j = int(cell[0]), int(cell[1])
        if not (0 <= i < self.grid_h and 0 <= j < self.grid_w):
            raise StructureError(
                f"cell {cell} outside {self.grid_h}x{self.grid_w} grid"
            )
        return i, j

    def group_of(self, cell: tuple[int, int]) -> int:
        i, j = self.check_cell(cell)
        return self.partition[i][j]

    def cell_slot_indices(self, cell: tuple[int, int]) -> np.ndarray:
        """Indices into the flat spatially-variable vector feeding this cell.

        Order matches the per-cell assembled code: shared scales coarse to
        fine, then the cell's local code.
        """
        i, j = self.check_cell(cell)
        idx: list[int] = []
        for k, s in enumerate(self.shared_scales):
            bu, bv = s.block_of((i, j), self.grid_h, self.grid_w)
            base = self.scale_offsets[k] + (bu * s.cols + bv) * s.dim
            idx.extend(range(base, base + s.dim))
        g = self.partition[i][j]
        base = self.local_offset + g * self.local_dim
        idx.extend(range(base, base + self.local_dim))
        return np.asarray(idx, dtype=np.int64)

    @cached_property
    def cell_slot_table(self) -> np.ndarray:
        """[n_cells, cell_code_len] gather table, cells in row-major order."""
        table = np.stack(
            [
                self.cell_slot_indices((i, j))
                for i in range(self.grid_h)
                for j in range(self.grid_w)
            ]
        )
        table.flags.writeable = False
        return table

    def scale_slot_range(self, k: int) -> tuple[int, int]:
        if not (0 <= k < len(self.shared_scales)):
            raise StructureError(f"scale index {k} out of range")
        return self.scale_offsets[k], self.scale_offsets[k] + self.scale_sizes[k]

    def group_slot_range(self, g: int) -> tuple[int, int]:
        if not (0 <= g < self.n_groups):
            raise StructureError(f"group id {g} out of range")
        base = self.local_offset + g * self.local_dim
        return base, base + self.local_dim

    def global_scale_index(self) -> int:
        """Index of the grid-wide (1x1) shared scale."""
        for k, s in enumerate(self.shared_scales):
            if s.rows == 1 and s.cols == 1:
                return k
        raise StructureError("structure has no 1x1 (grid-wide) shared scale")

    # ---- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "grid_h": self.grid_h,
            "grid_w": self.grid_w,
            "partition": [list(row) for row in self.partition],
            "local_dim": self.local_dim,
            "shared_scales": [[s.rows, s.cols, s.dim] for s in self.shared_scales],
            "style_dim": self.style_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseStructure":
        known = {"grid_h", "grid_w", "partition", "local_dim", "shared_scales", "style_dim"}
        unknown = set(d) - known
        if unknown:
            raise StructureError(f"unknown structure fields: {sorted(unknown)}")
        return cls(
            grid_h=int(d["grid_h"]),
            grid_w=int(d["grid_w"]),
            partition=tuple(tuple(int(g) for g in row) for row in d["partition"]),
            local_dim=int(d["local_dim"]),
            shared_scales=_normalize_scales(d["shared_scales"]),
            style_dim=int(d["style_dim"]),
        )


@dataclass(frozen=True)
class CellSelection:
    """An unordered set of grid cells, e.g. the cells covering a mouth."""

    cells: tuple[tuple[int, int], ...]

    def __post_init__(self):
        cells = tuple((int(r), int(c)) for r, c in self.cells)
        if len(set(cells)) != len(cells):
            raise StructureError("duplicate cells in selection")
        object.__setattr__(self, "cells", tuple(sorted(cells)))

    @classmethod
    def of(cls, *cells: tuple[int, int]) -> "CellSelection":
        return cls(tuple(cells))

    def validate(self, structure: NoiseStructure) -> None:
        for cell in self.cells:
            structure.check_cell(cell)

    def groups(self, structure: NoiseStructure) -> tuple[int, ...]:
        """Distinct group ids covering the selection, ascending."""
        self.validate(structure)
        return tuple(sorted({structure.group_of(c) for c in self.cells}))

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)


@dataclass(frozen=True)
class ScaleTarget:
    """Addresses one shared scale (all of its block entries)."""

    index: int


class StyleTarget:
    """Addresses the style code."""

    def __repr__(self):
        return "STYLE"


STYLE = StyleTarget()


@dataclass(frozen=True)
class SlotMask:
    """Selects a subset of latent slots: style, shared scales, local groups."""

    style: bool = False
    scales: frozenset[int] = frozenset()
    groups: frozenset[int] = frozenset()

    @classmethod
    def full(cls, structure: NoiseStructure) -> "SlotMask":
        return cls(
            style=True,
            scales=frozenset(range(len(structure.shared_scales))),
            groups=frozenset(range(structure.n_groups)),
        )

    @classmethod
    def for_cells(cls, structure: NoiseStructure, selection: CellSelection) -> "SlotMask":
        return cls(groups=frozenset(selection.groups(structure)))

    @classmethod
    def for_scale(cls, index: int) -> "SlotMask":
        return cls(scales=frozenset({index}))

    @classmethod
    def style_only(cls) -> "SlotMask":
        return cls(style=True)

    def validate(self, structure: NoiseStructure) -> None:
        for k in self.scales:
            structure.scale_slot_range(k)
        for g in self.groups:
            structure.group_slot_range(g)

    def union(self, other: "SlotMask") -> "SlotMask":
        return SlotMask(
            style=self.style or other.style,
            scales=self.scales | other.scales,
            groups=self.groups | other.groups,
        )

    def flat_indices(self, structure: NoiseStructure) -> np.ndarray:
        """Indices into the full flattened latent covered by this mask."""
        self.validate(structure)
        idx: list[int] = []
        if self.style:
            idx.extend(range(structure.style_dim))
        for k in sorted(self.scales):
            lo, hi = structure.scale_slot_range(k)
            idx.extend(range(structure.style_dim + lo, structure.style_dim + hi))
        for g in sorted(self.groups):
            lo, hi = structure.group_slot_range(g)
            idx.extend(range(structure.style_dim + lo, structure.style_dim + hi))
        return np.asarray(idx, dtype=np.int64)
