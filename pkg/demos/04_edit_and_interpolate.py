"""Latent editing: steer one image piece by piece.

Loads (or quickly improvises) a checkpoint, renders a base image, then shows
the three editing moves: resample a few cells, resample the shared region
codes, and swap the style code. Each edit is applied to several different
base latents with the SAME replacement values: the same code produces the
same local change on every image, which is the whole point of the structure.
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from gridgan import (
    CellSelection,
    Generator,
    GeneratorConfig,
    NoiseStructure,
    STYLE,
    ScaleTarget,
    SlotMask,
    interpolate,
    replace,
    sample_latent,
)
from gridgan.checkpoint import load_generator


def to_pil(img):
    return Image.fromarray(np.clip((img + 1) * 127.5, 0, 255).astype(np.uint8))


def grid_sheet(rows, path):
    arr = np.concatenate([np.concatenate(r, axis=1) for r in rows], axis=0)
    to_pil(arr).save(path)
    print("wrote", path)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--checkpoint", default=None, help="trained checkpoint (optional)")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="gridgan_edit_"))
    out.mkdir(parents=True, exist_ok=True)

    if args.checkpoint:
        gen, _ = load_generator(args.checkpoint)
    else:
        # untrained weights still demonstrate the mechanics
        cfg = GeneratorConfig(structure=NoiseStructure(), output_resolution=32,
                              channels={8: 32, 16: 24, 32: 16}, style_start=16,
                              mapping_depth=2, per_pixel_noise=False)
        gen = Generator(cfg, init_seed=0)

    structure = gen.config.structure
    bases = [sample_latent(structure, seed) for seed in range(4)]

    # One shared set of replacement codes for the center cells, used on every row.
    cells = CellSelection.of((3, 3), (3, 4), (4, 3), (4, 4))
    rng = np.random.default_rng(42)
    cell_codes = rng.standard_normal((4, structure.local_dim), dtype=np.float32)
    new_style = rng.standard_normal(structure.style_dim, dtype=np.float32)
    new_quadrants = rng.standard_normal((2, 2, 1), dtype=np.float32)

    rows = []
    for base in bases:
        rows.append([
            gen.synthesize(base, noise_seed=0),
            gen.synthesize(replace(base, cells, cell_codes), noise_seed=0),
            gen.synthesize(replace(base, ScaleTarget(1), new_quadrants), noise_seed=0),
            gen.synthesize(replace(base, STYLE, new_style), noise_seed=0),
        ])
    grid_sheet(rows, out / "edits.png")
    print("columns: base | same 4-cell codes | same quadrant codes | same style code")

    # Interpolation restricted to the edited slots: a smooth local morph.
    a, b = bases[0], replace(bases[0], cells, cell_codes)
    mask = SlotMask.for_cells(structure, cells)
    frames = [gen.synthesize(interpolate(a, b, t, mask), noise_seed=0)
              for t in np.linspace(0, 1, 7)]
    grid_sheet([frames], out / "interpolation.png")
