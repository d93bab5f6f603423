"""Noise-to-tensor mappings.

Two routes from a latent to the generator's first spatial tensor:

* ``map_dense``: the traditional single dense layer, ``reshape(W z + b)``.
  Kept as a reference implementation and oracle.
* :class:`StructuredInputMapping`, the structured route: every partition
  group owns an independent ``(W_g, b_g)`` pair, and each grid cell is
  produced only from the slots that cover it (shared scales plus its group's
  local code). Arranged as one dense matrix this is block-sparse with exact
  zeros outside the declared blocks, which is what the influence-mask and
  Jacobian checks verify.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .latent import StructuredLatent
from .structure import NoiseStructure, StructureError

__all__ = [
    "StructuredInputMapping",
    "map_dense",
    "map_structured",
    "assemble_dense",
    "declared_influence",
    "empirical_influence",
    "influence_matrix_text",
]


class StructuredInputMapping(nn.Module):
    """Independent per-group linear maps from cell codes to cell pixels.

    ``weight[g]`` is ``[channels, cell_code_len]`` and ``bias[g]`` is
    ``[channels]``; no parameter is shared between groups. The forward pass
    gathers each cell's code slots from the flat spatially-variable vector,
    so gradients are exactly zero for slots that do not cover a cell.
    """

    def __init__(
        self,
        structure: NoiseStructure,
        channels: int,
        rng: np.random.Generator | None = None,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.structure = structure
        self.channels = channels
        L = structure.cell_code_len
        rng = rng if rng is not None else np.random.default_rng(0)
        # Unit output variance per cell at init: rows scaled by 1/sqrt(fan_in).
        w = rng.standard_normal((structure.n_groups, channels, L)) / np.sqrt(L)
        self.weight = nn.Parameter(torch.as_tensor(w, dtype=dtype))
        self.bias = nn.Parameter(torch.zeros(structure.n_groups, channels, dtype=dtype))
        cell_groups = structure.partition_array.reshape(-1)
        self.register_buffer(
            "cell_slots",
            torch.as_tensor(structure.cell_slot_table.copy()),
            persistent=False,
        )
        self.register_buffer(
            "cell_groups", torch.as_tensor(cell_groups.copy()), persistent=False
        )

    @property
    def parameter_count(self) -> int:
        return self.weight.numel() + self.bias.numel()

    def forward(self, spatial: torch.Tensor) -> torch.Tensor:
        """[B, spatial_len] flat codes -> [B, C, grid_h, grid_w] input tensor."""
        s = self.structure
        if spatial.ndim != 2 or spatial.shape[1] != s.spatial_len:
            raise StructureError(
                f"expected spatial codes of shape [B, {s.spatial_len}], "
                f"got {tuple(spatial.shape)}"
            )
        codes = spatial[:, self.cell_slots]          # [B, n_cells, L]
        w = self.weight[self.cell_groups]            # [n_cells, C, L]
        b = self.bias[self.cell_groups]              # [n_cells, C]
        out = torch.einsum("ncl,bnl->bnc", w, codes) + b
        out = out.reshape(-1, s.grid_h, s.grid_w, self.channels)
        return out.permute(0, 3, 1, 2).contiguous()


def map_dense(z: np.ndarray, W: np.ndarray, b: np.ndarray, grid_h: int, grid_w: int) -> np.ndarray:
    """Dense baseline: ``reshape(W z + b)`` to [grid_h, grid_w, channels].

    Cells are laid out row-major. ``b`` may be per-channel ``[C]`` (broadcast
    over cells, the traditional form) or a full ``[grid_h, grid_w, C]`` bias.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != z.shape[0]:
        raise StructureError(f"W shape {W.shape} incompatible with z length {z.shape[0]}")
    if W.shape[0] % (grid_h * grid_w):
        raise StructureError(
            f"W rows {W.shape[0]} not divisible by {grid_h}x{grid_w} cells"
        )
    channels = W.shape[0] // (grid_h * grid_w)
    out = (W @ z).reshape(grid_h, grid_w, channels)
    if b.shape == (channels,):
        out = out + b[None, None, :]
    elif b.shape == (grid_h, grid_w, channels):
        out = out + b
    else:
        raise StructureError(
            f"bias shape {b.shape} is neither ({channels},) nor "
            f"({grid_h}, {grid_w}, {channels})"
        )
    return out


def map_structured(latent: StructuredLatent, mapping: StructuredInputMapping) -> np.ndarray:
    """Apply the structured mapping to one latent -> [grid_h, grid_w, C]."""
    if latent.structure != mapping.structure:
        raise StructureError("latent structure does not match mapping parameters")
    with torch.no_grad():
        spatial = torch.as_tensor(latent.spatial_flat, dtype=mapping.weight.dtype)
        out = mapping(spatial[None])
    return out[0].permute(1, 2, 0).numpy()


def assemble_dense(mapping: StructuredInputMapping) -> tuple[np.ndarray, np.ndarray]:
    """Expand the per-group parameters into an equivalent dense (W, b).

    Returns ``W`` of shape [n_cells*C, spatial_len] (zero outside the declared
    blocks) and a full per-cell bias of shape [grid_h, grid_w, C], such that
    ``map_dense(spatial_flat, W, b)`` reproduces the structured mapping.
    """
    s = mapping.structure
    C = mapping.channels
    weight = mapping.weight.detach().cpu().numpy()
    bias = mapping.bias.detach().cpu().numpy()
    W = np.zeros((s.n_cells * C, s.spatial_len), dtype=weight.dtype)
    b = np.zeros((s.grid_h, s.grid_w, C), dtype=bias.dtype)
    for n in range(s.n_cells):
        i, j = divmod(n, s.grid_w)
        g = s.partition[i][j]
        cols = s.cell_slot_table[n]
        W[n * C : (n + 1) * C, cols] = weight[g]
        b[i, j] = bias[g]
    return W, b


# ---- influence masks ------------------------------------------------------


def declared_influence(structure: NoiseStructure) -> dict[tuple, frozenset]:
    """Cells each code slot is allowed to touch, straight from the layout.

    Keys: ``("style",)``, ``("scale", k, bu, bv)``, ``("local", g)``.
    The style slot maps to the empty set; it never enters the input tensor.
    """
    masks: dict[tuple, frozenset] = {("style",): frozenset()}
    for k, scale in enumerate(structure.shared_scales):
        blocks: dict[tuple[int, int], set] = {}
        for i in range(structure.grid_h):
            for j in range(structure.grid_w):
                blocks.setdefault(scale.block_of((i, j), structure.grid_h, structure.grid_w), set()).add((i, j))
        for (bu, bv), cells in blocks.items():
            masks[("scale", k, bu, bv)] = frozenset(cells)
    for g in range(structure.n_groups):
        masks[("local", g)] = frozenset(structure.cells_of_group[g])
    return masks


def _slot_entries(structure: NoiseStructure, slot: tuple) -> range:
    """Flat spatial indices of all entries belonging to one slot."""
    if slot == ("style",):
        return range(0)
    if slot[0] == "scale":
        _, k, bu, bv = slot
        scale = structure.shared_scales[k]
        base = structure.scale_offsets[k] + (bu * scale.cols + bv) * scale.dim
        return range(base, base + scale.dim)
    if slot[0] == "local":
        lo, hi = structure.group_slot_range(slot[1])
        return range(lo, hi)
    raise StructureError(f"unknown slot {slot!r}")


def empirical_influence(
    mapping: StructuredInputMapping, eps: float = 1e-3
) -> dict[tuple, frozenset]:
    """Measure influence by perturbing each slot entry and diffing the output.

    Every scalar entry of a slot is nudged by ``eps`` independently; the
    slot's mask is the union of cells whose output changed at all. An entry
    disagreeing with its siblings would show up as an enlarged union, so this
    is a strict check of the declared sharing semantics.
    """
    s = mapping.structure
    masks: dict[tuple, set] = {("style",): set()}
    spatial = torch.zeros(1, s.spatial_len, dtype=mapping.weight.dtype)
    with torch.no_grad():
        base = mapping(spatial)
        for slot in declared_influence(s):
            if slot == ("style",):
                continue
            changed: set = set()
            for e in _slot_entries(s, slot):
                bumped = spatial.clone()
                bumped[0, e] += eps
                diff = (mapping(bumped) - base).abs().sum(dim=1)[0]  # [H, W]
                ii, jj = torch.nonzero(diff > 0, as_tuple=True)
                changed |= {(int(i), int(j)) for i, j in zip(ii, jj)}
            masks[slot] = changed
    return {slot: frozenset(cells) for slot, cells in masks.items()}


def influence_matrix_text(structure: NoiseStructure, slot: tuple, cells: frozenset) -> str:
    """Render one slot's mask as a 0/1 text matrix."""
    rows = []
    for i in range(structure.grid_h):
        rows.append(
            "".join("1" if (i, j) in cells else "." for j in range(structure.grid_w))
        )
    name = {
        "style": lambda s_: "style",
        "scale": lambda s_: f"scale[{s_[1]}] block ({s_[2]},{s_[3]})",
        "local": lambda s_: f"local[group {s_[1]}]",
    }[slot[0]](slot)
    return f"{name}\n" + "\n".join(rows)
