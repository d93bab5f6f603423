import numpy as np
import pytest
from PIL import Image, ImageDraw

from gridgan import Generator, GeneratorConfig, NoiseStructure
from gridgan.checkpoint import save_checkpoint


TINY_STRUCTURE = NoiseStructure(
    grid_h=4, grid_w=4, local_dim=3, shared_scales=((1, 1, 1), (2, 2, 1)), style_dim=8
)


@pytest.fixture
def tiny_structure():
    return TINY_STRUCTURE


@pytest.fixture
def default_structure():
    return NoiseStructure()


def tiny_generator(style_start=8, per_pixel_noise=False, output=16, mapping_depth=2,
                   structure=None, init_seed=0):
    structure = structure if structure is not None else TINY_STRUCTURE
    channels = {4: 12, 8: 10, 16: 8, 32: 8}
    cfg = GeneratorConfig(
        structure=structure,
        output_resolution=output,
        channels={r: channels[r] for r in (4, 8, 16, 32) if structure.grid_h <= r <= output},
        style_start=style_start,
        mapping_depth=mapping_depth,
        per_pixel_noise=per_pixel_noise,
    )
    return Generator(cfg, init_seed=init_seed)


def write_blob_image(path, size, rng):
    """One synthetic photo: gradient background plus a colored ellipse."""
    gx = np.linspace(0, 1, size)[None, :]
    gy = np.linspace(0, 1, size)[:, None]
    base = rng.uniform(40, 215, 3)
    tilt = rng.uniform(-40, 40, 3)
    img = np.clip(base[None, None] + tilt[None, None] * (gx + gy)[..., None], 0, 255)
    pil = Image.fromarray(img.astype(np.uint8))
    draw = ImageDraw.Draw(pil)
    cx, cy = rng.uniform(0.25, 0.75, 2) * size
    r = rng.uniform(0.12, 0.3) * size
    color = tuple(int(v) for v in rng.uniform(0, 255, 3))
    draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=color)
    pil.save(path)


def make_image_dir(root, n, size=24, seed=0):
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for k in range(n):
        write_blob_image(root / f"img_{k:05d}.png", size, rng)
    return root


@pytest.fixture(scope="session")
def toy_checkpoint(tmp_path_factory):
    """Untrained checkpoint over the default 8x8 structure, small everywhere else."""
    cfg = GeneratorConfig(
        structure=NoiseStructure(),
        output_resolution=16,
        channels={8: 12, 16: 10},
        style_start=16,
        mapping_depth=2,
        per_pixel_noise=True,
    )
    gen = Generator(cfg, init_seed=5)
    path = tmp_path_factory.mktemp("ckpt") / "toy"
    save_checkpoint(path, gen=gen)
    return path
