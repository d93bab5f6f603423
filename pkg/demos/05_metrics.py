"""The three evaluation metrics on toy inputs.

FID between Gaussian fits (with two hand-checkable 1-D cases), perceptual
path length in Z and W space, and linear separability of synthetic
attributes. Everything runs with the bundled deterministic extractors, so no
pretrained network is needed.
"""

import numpy as np

from gridgan import Generator, GeneratorConfig, NoiseStructure
from gridgan.metrics import (
    GaussianStats,
    GeneratorAdapter,
    RandomProjectionDistance,
    fid,
    path_length,
    separability,
    squared_l2_distance,
)

# --- FID: closed-form sanity checks ------------------------------------------
print("fid(N(0,1), N(1,1))      =", fid(GaussianStats([0.0], [[1.0]]),
                                        GaussianStats([1.0], [[1.0]])))   # 1.0
print("fid(N(0,1), N(0,4))      =", fid(GaussianStats([0.0], [[1.0]]),
                                        GaussianStats([0.0], [[4.0]])))   # 1.0
feats = np.random.default_rng(0).standard_normal((256, 16))
same = GaussianStats.from_samples(feats)
print("fid(stats, same stats)   =", fid(same, GaussianStats.from_samples(feats)))

# --- path length on a small generator ----------------------------------------
cfg = GeneratorConfig(structure=NoiseStructure(), output_resolution=16,
                      channels={8: 24, 16: 16}, style_start=16, mapping_depth=2,
                      per_pixel_noise=False)
adapter = GeneratorAdapter(Generator(cfg, init_seed=0))
dist = RandomProjectionDistance(adapter.image_shape, dim=32, seed=1)
for space in ("z", "w"):
    full = path_length(adapter, space=space, mode="full", n_samples=64,
                       distance=dist, seed=0)
    end = path_length(adapter, space=space, mode="end", n_samples=64,
                      distance=dist, seed=0)
    print(f"path length {space}-space: full={full:.4f} end={end:.4f}")

# --- separability --------------------------------------------------------------
rng = np.random.default_rng(1)
codes = rng.standard_normal((1500, 12))

# attribute perfectly readable from the first code entry: score -> 1 (disentangled)
score, _ = separability(codes, codes,
                        lambda imgs: ((imgs[:, :1] > 0).astype(int), np.abs(imgs[:, :1])))
print("separability, separable attribute  :", round(score, 3))

# attribute independent of the codes: score -> 2 (one full bit left over)
labels = rng.integers(0, 2, (1500, 1))
conf = rng.uniform(0.5, 1.0, (1500, 1))
score, _ = separability(codes, codes, lambda imgs: (labels, conf))
print("separability, independent attribute:", round(score, 3))
