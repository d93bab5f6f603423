"""Train a small model end to end on a synthetic image folder.

Writes a dataset of colored-blob photos, trains for a few thousand images at
16x16, logs metric curves, and renders a sample sheet before/after. Takes a
couple of minutes on a CPU; bump --images for a better model.
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from gridgan import Generator, sample_latent
from gridgan.checkpoint import load_generator
from gridgan.config import RunConfig
from gridgan.data import build_manifest
from gridgan.loop import train_loop


def write_dataset(root: Path, n: int, size: int = 40, seed: int = 0):
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for k in range(n):
        gx = np.linspace(0, 1, size)[None, :]
        gy = np.linspace(0, 1, size)[:, None]
        base = rng.uniform(40, 215, 3)
        tilt = rng.uniform(-40, 40, 3)
        img = np.clip(base[None, None] + tilt[None, None] * (gx + gy)[..., None], 0, 255)
        pil = Image.fromarray(img.astype(np.uint8))
        draw = ImageDraw.Draw(pil)
        cx, cy = rng.uniform(0.25, 0.75, 2) * size
        r = rng.uniform(0.12, 0.3) * size
        draw.ellipse([cx - r, cy - r, cx + r, cy + r],
                     fill=tuple(int(v) for v in rng.uniform(0, 255, 3)))
        pil.save(root / f"img_{k:05d}.png")


def sample_sheet(gen: Generator, path: Path, n: int = 8, seed: int = 0):
    imgs = [gen.synthesize(sample_latent(gen.config.structure, seed + k), noise_seed=k)
            for k in range(n)]
    row = np.concatenate(imgs, axis=1)
    arr = np.clip((row + 1) * 127.5, 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--images", type=int, default=6000)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="gridgan_demo_"))
    data = out / "data"
    write_dataset(data, 512)
    print("dataset:", data)

    cfg = RunConfig.from_dict({
        "seed": 0,
        "resolution": 16,
        "grid": 8,
        "channels": {"8": 48, "16": 32},
        "style_start": 16,
        "batch_size": 32,
        "r1_interval": 4,
        "total_images": args.images,
        "checkpoint_every": 1_000_000,
        "metrics_every": max(args.images // 3, 1),
        "metrics_samples": 128,
        "ppl_samples": 16,
    })
    manifest = build_manifest(data, cfg.resolution, cache_dir=out / "cache")

    gen0 = Generator(cfg.generator_config(), init_seed=cfg.seed)
    sample_sheet(gen0, out / "before.png")

    ckpt = train_loop(cfg, manifest, out / "run")
    gen, _ = load_generator(ckpt)
    sample_sheet(gen, out / "after.png")

    print("metric curves:", (out / "run" / "metrics.csv").read_text())
    print("before/after sheets:", out / "before.png", out / "after.png")
    print("checkpoint:", ckpt)
