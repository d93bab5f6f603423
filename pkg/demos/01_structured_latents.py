"""Walk through the structured latent space.

The latent is not one flat vector: it is a grid of independent per-cell
codes, a stack of codes shared across regions (one grid-wide entry, one
entry per 2x2 quadrant), and a separate style code. This script builds the
default structure, samples a latent, and shows exactly which entries any two
cells share.
"""

import numpy as np

from gridgan import (
    CellSelection,
    NoiseStructure,
    SlotMask,
    cell_code,
    flatten,
    interpolate,
    per_row_partition,
    replace,
    sample_latent,
)

# The top-performing layout: 8x8 grid, 16 entries per cell, one global entry,
# one entry per quadrant, and a 128-dim style code.
structure = NoiseStructure()
print("grid:", structure.grid_h, "x", structure.grid_w)
print("spatially-variable length:", structure.spatial_len)   # 1 + 4 + 64*16 = 1029
print("full flattened latent:", structure.total_len)          # + 128 style entries
print("code entries feeding one cell:", structure.cell_code_len)  # 1 + 1 + 16

latent = sample_latent(structure, seed=7)

# Each cell sees [global entry, its quadrant's entry, its own 16 local entries].
a = cell_code(latent, (0, 0))
b = cell_code(latent, (0, 1))   # same quadrant
c = cell_code(latent, (0, 7))   # opposite quadrant
print("\ncells (0,0) vs (0,1): share global + quadrant ->", np.array_equal(a[:2], b[:2]))
print("cells (0,0) vs (0,7): share global only        ->", a[0] == c[0], ",", a[1] != c[1])

# Editing is slot-local. Replace the codes of four cells, everything else stays.
selection = CellSelection.of((3, 3), (3, 4), (4, 3), (4, 4))
new_codes = np.random.default_rng(0).standard_normal((4, 16), dtype=np.float32)
edited = replace(latent, selection, new_codes)
diff = flatten(edited) != flatten(latent)
print("\nentries changed by a 4-cell replacement:", int(diff.sum()), "of", structure.total_len)

# Masked interpolation moves only the selected slots.
other = sample_latent(structure, seed=8)
mask = SlotMask.for_scale(1)  # the 2x2 quadrant codes only
halfway = interpolate(latent, other, 0.5, mask)
moved = flatten(halfway) != flatten(latent)
print("entries moved by quadrant-scale interpolation:", int(moved.sum()))

# Alternative structures from the design space: one code per row.
rows = NoiseStructure(partition=per_row_partition(8, 8))
print("\nper-row structure groups:", rows.n_groups, "spatial length:", rows.spatial_len)
