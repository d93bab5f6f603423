"""Structured latents and the editing operations on them.

A :class:`StructuredLatent` is one sample of every code a generator consumes:
the style code plus the spatially-variable codes (shared scales and per-group
local codes) laid out by a :class:`~gridgan.structure.NoiseStructure`.

Latents are immutable; ``replace`` and ``interpolate`` return new values.
The canonical flat layout is: style code, then shared scales coarse to fine,
then local codes with groups in row-major cell order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .structure import (
    STYLE,
    CellSelection,
    NoiseStructure,
    ScaleTarget,
    SlotMask,
    StructureError,
    StyleTarget,
)

__all__ = [
    "EditError",
    "StructuredLatent",
    "sample_latent",
    "flatten",
    "unflatten",
    "cell_code",
    "cell_code_matrix",
    "replace",
    "interpolate",
    "latent_digest",
    "to_json",
    "from_json",
]

LATENT_FORMAT = "structured-latent/1"


class EditError(ValueError):
    """Raised when an edit addresses slots that do not exist or shapes mismatch."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float32)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StructuredLatent:
    """One sample of all codes under a structure. Arrays are read-only float32."""

    structure: NoiseStructure
    style_code: np.ndarray
    global_codes: tuple[np.ndarray, ...]
    local_codes: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        s = self.structure
        style = _frozen(self.style_code)
        if style.shape != (s.style_dim,):
            raise EditError(f"style code shape {style.shape} != ({s.style_dim},)")
        if len(self.global_codes) != len(s.shared_scales):
            raise EditError(
                f"expected {len(s.shared_scales)} shared-scale codes, "
                f"got {len(self.global_codes)}"
            )
        globals_ = []
        for code, scale in zip(self.global_codes, s.shared_scales):
            code = _frozen(code)
            want = (scale.rows, scale.cols, scale.dim)
            if code.shape != want:
                raise EditError(f"scale code shape {code.shape} != {want}")
            globals_.append(code)
        local = _frozen(self.local_codes)
        if local.shape != (s.n_groups, s.local_dim):
            raise EditError(
                f"local codes shape {local.shape} != ({s.n_groups}, {s.local_dim})"
            )
        object.__setattr__(self, "style_code", style)
        object.__setattr__(self, "global_codes", tuple(globals_))
        object.__setattr__(self, "local_codes", local)

    @property
    def spatial_flat(self) -> np.ndarray:
        """Flattened spatially-variable part (no style)."""
        parts = [c.ravel() for c in self.global_codes] + [self.local_codes.ravel()]
        return np.concatenate(parts)

    def with_parts(self, style=None, global_codes=None, local_codes=None) -> "StructuredLatent":
        return StructuredLatent(
            structure=self.structure,
            style_code=self.style_code if style is None else style,
            global_codes=self.global_codes if global_codes is None else tuple(global_codes),
            local_codes=self.local_codes if local_codes is None else local_codes,
            rng_seed=self.rng_seed,
        )


def sample_latent(structure: NoiseStructure, seed: int) -> StructuredLatent:
    """Draw a latent with every entry i.i.d. standard normal.

    Deterministic for a given seed; entries are drawn in canonical flat
    order so the draw is independent of how the structure is partitioned.
    """
    if not isinstance(structure, NoiseStructure):
        raise StructureError(f"expected NoiseStructure, got {type(structure).__name__}")
    rng = np.random.default_rng(seed)
    flat = rng.standard_normal(structure.total_len, dtype=np.float32)
    return unflatten(structure, flat, rng_seed=int(seed))


def flatten(latent: StructuredLatent) -> np.ndarray:
    """Canonical flat vector: style, scales coarse to fine, groups by id."""
    return np.concatenate([latent.style_code, latent.spatial_flat])


def unflatten(
    structure: NoiseStructure, flat: np.ndarray, rng_seed: int | None = None
) -> StructuredLatent:
    """Inverse of :func:`flatten` (exact round-trip)."""
    flat = np.asarray(flat, dtype=np.float32).ravel()
    if flat.shape != (structure.total_len,):
        raise EditError(f"flat latent length {flat.shape[0]} != {structure.total_len}")
    style = flat[: structure.style_dim]
    off = structure.style_dim
    globals_ = []
    for s in structure.shared_scales:
        n = s.rows * s.cols * s.dim
        globals_.append(flat[off : off + n].reshape(s.rows, s.cols, s.dim))
        off += n
    local = flat[off:].reshape(structure.n_groups, structure.local_dim)
    return StructuredLatent(structure, style, tuple(globals_), local, rng_seed=rng_seed)


def cell_code(latent: StructuredLatent, cell: tuple[int, int]) -> np.ndarray:
    """Assembled per-cell code: shared entries coarse to fine, then the local code."""
    s = latent.structure
    i, j = s.check_cell(cell)
    parts = []
    for k, scale in enumerate(s.shared_scales):
        bu, bv = scale.block_of((i, j), s.grid_h, s.grid_w)
        parts.append(latent.global_codes[k][bu, bv])
    parts.append(latent.local_codes[s.partition[i][j]])
    return np.concatenate(parts)


def cell_code_matrix(latent: StructuredLatent) -> np.ndarray:
    """[n_cells, cell_code_len] matrix of assembled codes, cells row-major."""
    return latent.spatial_flat[latent.structure.cell_slot_table]


def _as_group_values(
    structure: NoiseStructure, selection: CellSelection, values
) -> dict[int, np.ndarray]:
    groups = selection.groups(structure)
    values = np.asarray(values, dtype=np.float32)
    if values.ndim == 1 and values.shape == (structure.local_dim,):
        sizes = {len(structure.cells_of_group[g]) for g in groups}
        if len(groups) > 1 and len(sizes) > 1:
            raise EditError(
                "one local code broadcast over groups of different sizes "
                f"(cells per group: {sorted(sizes)}); pass one code per group"
            )
        return {g: values for g in groups}
    if values.ndim == 1 and values.size == len(groups) * structure.local_dim:
        values = values.reshape(len(groups), structure.local_dim)
    if values.shape != (len(groups), structure.local_dim):
        raise EditError(
            f"values shape {values.shape} does not match {len(groups)} selected "
            f"group(s) of local_dim {structure.local_dim}"
        )
    return {g: values[n] for n, g in enumerate(groups)}


def replace(latent: StructuredLatent, target, values) -> StructuredLatent:
    """Return a copy of ``latent`` with the targeted slots overwritten.

    ``target`` is a :class:`CellSelection` (local codes of the groups covering
    the cells; values are one ``[local_dim]`` code per distinct group in
    ascending group-id order, or a single code broadcast to all), a
    :class:`ScaleTarget`, or :data:`STYLE`.
    """
    s = latent.structure
    if isinstance(target, CellSelection):
        per_group = _as_group_values(s, target, values)
        local = latent.local_codes.copy()
        for g, v in per_group.items():
            local[g] = v
        return latent.with_parts(local_codes=local)
    if isinstance(target, ScaleTarget):
        s.scale_slot_range(target.index)
        scale = s.shared_scales[target.index]
        values = np.asarray(values, dtype=np.float32).reshape(-1)
        want = (scale.rows, scale.cols, scale.dim)
        if values.size != scale.rows * scale.cols * scale.dim:
            raise EditError(f"scale {target.index} values must have shape {want}")
        globals_ = list(latent.global_codes)
        globals_[target.index] = values.reshape(want)
        return latent.with_parts(global_codes=globals_)
    if isinstance(target, StyleTarget):
        values = np.asarray(values, dtype=np.float32).reshape(-1)
        if values.shape != (s.style_dim,):
            raise EditError(f"style values must have length {s.style_dim}")
        return latent.with_parts(style=values)
    raise EditError(f"unknown replace target {target!r}")


def interpolate(
    a: StructuredLatent, b: StructuredLatent, t: float, mask: SlotMask
) -> StructuredLatent:
    """Linear interpolation of the masked slots; unmasked slots keep ``a``'s values.

    ``t`` must lie in [0, 1]; t=0 returns ``a`` exactly, t=1 returns ``a``
    with the masked slots taken from ``b``.
    """
    if a.structure != b.structure:
        raise EditError("latents belong to different structures")
    if not (0.0 <= t <= 1.0):
        raise EditError(f"t={t} outside [0, 1]")
    mask.validate(a.structure)
    t = np.float32(t)
    fa = flatten(a)
    fb = flatten(b)
    out = fa.copy()
    idx = mask.flat_indices(a.structure)
    out[idx] = (np.float32(1.0) - t) * fa[idx] + t * fb[idx]
    return unflatten(a.structure, out, rng_seed=a.rng_seed)


def latent_digest(latent: StructuredLatent) -> str:
    """Hash of structure plus canonical code bytes; identical iff latents match."""
    h = hashlib.sha256()
    h.update(json.dumps(latent.structure.to_dict(), sort_keys=True).encode())
    h.update(flatten(latent).tobytes())
    return h.hexdigest()


def spatial_digest(latent: StructuredLatent) -> str:
    """Hash of the spatially-variable part only (style excluded)."""
    h = hashlib.sha256()
    h.update(latent.spatial_flat.tobytes())
    return h.hexdigest()


def style_digest(latent: StructuredLatent) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(latent.style_code).tobytes())
    return h.hexdigest()


def to_json(latent: StructuredLatent) -> str:
    """Canonical text record: structure, seed, and the flat code vector.

    Floats are written with a decimal-exact encoding (each float32 value is
    emitted as the shortest decimal that converts back to the same value),
    so the round-trip is bit-exact.
    """
    doc = {
        "format": LATENT_FORMAT,
        "structure": latent.structure.to_dict(),
        "rng_seed": latent.rng_seed,
        "codes": [float(x) for x in flatten(latent)],
    }
    return json.dumps(doc, sort_keys=True)


def from_json(text: str) -> StructuredLatent:
    doc = json.loads(text)
    if doc.get("format") != LATENT_FORMAT:
        raise EditError(f"unsupported latent record format {doc.get('format')!r}")
    structure = NoiseStructure.from_dict(doc["structure"])
    codes = np.asarray(doc["codes"], dtype=np.float32)
    seed = doc.get("rng_seed")
    return unflatten(structure, codes, rng_seed=None if seed is None else int(seed))
