"""Quality and disentanglement metrics.

Implements the Frechet distance between Gaussian embedding fits (FID),
perceptual path length over Z- or W-space interpolations, and linear
separability of attributes from latent codes. The image embedding, the
perceptual distance and the attribute classifier are injected; deterministic
random-projection implementations are bundled so nothing here needs
pretrained weights, and an adapter slot accepts any callable vision network
for realistic runs.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from sklearn.svm import LinearSVC

from .synthesis import Generator

logger = logging.getLogger(__name__)

__all__ = [
    "GaussianStats",
    "MetricReport",
    "fid",
    "fid_details",
    "path_length",
    "separability",
    "slerp",
    "lerp",
    "squared_l2_distance",
    "RandomProjectionEmbedding",
    "RandomProjectionDistance",
    "RandomProjectionClassifier",
    "GeneratorAdapter",
    "standard_metric_values",
]


# ---- FID ---------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianStats:
    """Gaussian fit (mean, covariance) of a set of embeddings."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} incompatible with mean {mean.shape}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2.0)

    @classmethod
    def from_samples(cls, feats: np.ndarray) -> "GaussianStats":
        feats = np.asarray(feats, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 2:
            raise ValueError("need a [n >= 2, dim] sample matrix")
        return cls(mean=feats.mean(axis=0), cov=np.cov(feats, rowvar=False))


def fid_details(a: GaussianStats, b: GaussianStats, clip_eps: float = 1e-6) -> tuple[float, dict]:
    """Frechet distance between two Gaussian fits, with clipping diagnostics.

    d^2 = |mu_a - mu_b|^2 + Tr(C_a + C_b - 2 (C_a C_b)^{1/2}). The trace term
    uses the eigenvalues of C_a C_b; tiny negative eigenvalues (a non-PSD
    product from numerical error) are discarded and counted in the returned
    details. Identical stats short-circuit to exactly 0, which the generic
    eigenvalue path can only hit up to rounding.
    """
    if a.mean.shape != b.mean.shape:
        raise ValueError("embedding dimensions differ")
    if np.array_equal(a.mean, b.mean) and np.array_equal(a.cov, b.cov):
        return 0.0, {"clipped": 0, "identical": True}
    diff = a.mean - b.mean
    eigvals = np.linalg.eigvals(a.cov @ b.cov)
    real = eigvals.real
    clipped = int(np.sum(real < 0))
    if np.any(real < -clip_eps):
        logger.warning(
            "covariance product has %d eigenvalue(s) below -%.0e (min %.3e); clipping",
            int(np.sum(real < -clip_eps)), clip_eps, float(real.min()),
        )
    real = np.clip(real, 0.0, None)
    trace_term = float(np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.sqrt(real).sum())
    value = float(diff @ diff + trace_term)
    return value, {"clipped": clipped, "identical": False}


def fid(a: GaussianStats, b: GaussianStats, clip_eps: float = 1e-6) -> float:
    return fid_details(a, b, clip_eps=clip_eps)[0]


# ---- interpolation helpers ----------------------------------------------------


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.sqrt((v**2).sum(axis=-1, keepdims=True))


def slerp(a: np.ndarray, b: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Spherical interpolation of batches of vectors (as used for Z space)."""
    a = _normalize(np.asarray(a, dtype=np.float64))
    b = _normalize(np.asarray(b, dtype=np.float64))
    d = (a * b).sum(axis=-1, keepdims=True)
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    p = t * np.arccos(np.clip(d, -1.0, 1.0))
    c = _normalize(b - d * a)
    out = a * np.cos(p) + c * np.sin(p)
    return _normalize(out)


def lerp(a: np.ndarray, b: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    return a * (1.0 - t) + b * t


def squared_l2_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Summed squared pixel distance per image pair."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return (diff.reshape(diff.shape[0], -1) ** 2).sum(axis=1)


class RandomProjectionEmbedding:
    """Deterministic linear image embedding; stands in for a pretrained net."""

    def __init__(self, image_shape: tuple[int, int, int], dim: int = 64, seed: int = 0):
        self.image_shape = tuple(image_shape)
        self.dim = dim
        self.seed = seed
        n = int(np.prod(image_shape))
        rng = np.random.default_rng(seed)
        self.proj = rng.standard_normal((n, dim)) / math.sqrt(n)

    @property
    def name(self) -> str:
        return f"random-projection(dim={self.dim}, seed={self.seed})"

    def __call__(self, images: np.ndarray) -> np.ndarray:
        images = np.asarray(images, dtype=np.float64)
        if images.shape[1:] != self.image_shape:
            raise ValueError(f"expected images {self.image_shape}, got {images.shape[1:]}")
        return images.reshape(images.shape[0], -1) @ self.proj


class RandomProjectionDistance:
    """Squared distance in a fixed random-projection embedding."""

    def __init__(self, image_shape: tuple[int, int, int], dim: int = 64, seed: int = 0):
        self.embed = RandomProjectionEmbedding(image_shape, dim=dim, seed=seed)

    @property
    def name(self) -> str:
        return f"random-projection-l2(dim={self.embed.dim}, seed={self.embed.seed})"

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        fa, fb = self.embed(a), self.embed(b)
        return ((fa - fb) ** 2).sum(axis=1)


class RandomProjectionClassifier:
    """Deterministic pseudo-attribute classifier (sign of image projections).

    Useful as the pluggable-classifier default when no pretrained attribute
    network is available; confidences are the projection magnitudes.
    """

    def __init__(self, image_shape: tuple[int, int, int], n_attributes: int = 4, seed: int = 0):
        self.embed = RandomProjectionEmbedding(image_shape, dim=n_attributes, seed=seed)
        self.n_attributes = n_attributes

    @property
    def name(self) -> str:
        return f"random-projection-attrs(n={self.n_attributes})"

    def __call__(self, images: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        proj = self.embed(images)
        return (proj > 0).astype(np.int64), np.abs(proj)


# ---- generator adapter ---------------------------------------------------------


class GeneratorAdapter:
    """Batched, no-grad view of a generator for metric evaluation.

    Renders without per-pixel noise unless a noise rng is supplied, so metric
    values are a function of the latents alone.
    """

    def __init__(self, gen: Generator, batch_size: int = 32):
        self.gen = gen
        self.batch_size = batch_size
        s = gen.config.structure
        self.structure = s
        self.latent_dim = s.total_len
        self.style_dim = s.style_dim
        self.spatial_len = s.spatial_len
        r = gen.config.output_resolution
        self.image_shape = (r, r, 3)

    def _chunks(self, n: int):
        for lo in range(0, n, self.batch_size):
            yield lo, min(lo + self.batch_size, n)

    def render_flat(self, flat: np.ndarray, noise_rng=None) -> np.ndarray:
        flat = np.asarray(flat, dtype=np.float32)
        out = np.empty((flat.shape[0],) + self.image_shape, dtype=np.float32)
        sd = self.style_dim
        with torch.no_grad():
            for lo, hi in self._chunks(flat.shape[0]):
                z = torch.from_numpy(flat[lo:hi])
                img = self.gen(z[:, sd:], style=z[:, :sd], noise_rng=noise_rng)
                out[lo:hi] = img.permute(0, 2, 3, 1).numpy()
        return out

    def map_w(self, styles: np.ndarray) -> np.ndarray:
        styles = np.asarray(styles, dtype=np.float32)
        with torch.no_grad():
            return self.gen.map_w(torch.from_numpy(styles)).numpy()

    def render_spatial_w(self, spatial: np.ndarray, w: np.ndarray, noise_rng=None) -> np.ndarray:
        spatial = np.asarray(spatial, dtype=np.float32)
        w = np.asarray(w, dtype=np.float32)
        out = np.empty((spatial.shape[0],) + self.image_shape, dtype=np.float32)
        with torch.no_grad():
            for lo, hi in self._chunks(spatial.shape[0]):
                img = self.gen(
                    torch.from_numpy(spatial[lo:hi]),
                    w=torch.from_numpy(w[lo:hi]),
                    noise_rng=noise_rng,
                )
                out[lo:hi] = img.permute(0, 2, 3, 1).numpy()
        return out

    def sample_images(self, n: int, seed: int, with_noise: bool = True) -> np.ndarray:
        rng = np.random.default_rng(seed)
        flat = rng.standard_normal((n, self.latent_dim)).astype(np.float32)
        noise_rng = rng if (with_noise and self.gen.config.per_pixel_noise) else None
        return self.render_flat(flat, noise_rng=noise_rng)


# ---- perceptual path length ----------------------------------------------------


def path_length(
    model,
    space: str = "z",
    mode: str = "full",
    n_samples: int = 10_000,
    epsilon: float = 1e-4,
    distance=None,
    seed: int = 0,
    batch_size: int = 256,
) -> float:
    """Mean scaled distance between images of epsilon-separated interpolants.

    Z space interpolates the full flattened latent spherically; W space
    interpolates the mapped style latent linearly while the pair's
    spatially-variable codes are held fixed. ``mode='full'`` samples the
    interpolation position uniformly in [0, 1]; ``'end'`` samples it from
    {0, 1}. ``distance(a_imgs, b_imgs) -> [n]`` is pluggable.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if n_samples < 10:
        raise ValueError(f"n_samples must be >= 10, got {n_samples}")
    if space not in ("z", "w"):
        raise ValueError(f"space must be 'z' or 'w', got {space!r}")
    if mode not in ("full", "end"):
        raise ValueError(f"mode must be 'full' or 'end', got {mode!r}")
    if distance is None:
        distance = squared_l2_distance
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    while done < n_samples:
        n = min(batch_size, n_samples - done)
        t = rng.uniform(0.0, 1.0, n) if mode == "full" else rng.integers(0, 2, n).astype(np.float64)
        if space == "z":
            z0 = rng.standard_normal((n, model.latent_dim))
            z1 = rng.standard_normal((n, model.latent_dim))
            e0 = slerp(z0, z1, t)
            e1 = slerp(z0, z1, t + epsilon)
            img0 = model.render_flat(e0)
            img1 = model.render_flat(e1)
        else:
            s0 = rng.standard_normal((n, model.style_dim))
            s1 = rng.standard_normal((n, model.style_dim))
            spatial = rng.standard_normal((n, model.spatial_len))
            w0 = model.map_w(s0)
            w1 = model.map_w(s1)
            e0 = lerp(w0, w1, t)
            e1 = lerp(w0, w1, t + epsilon)
            img0 = model.render_spatial_w(spatial, e0)
            img1 = model.render_spatial_w(spatial, e1)
        d = np.asarray(distance(img0, img1), dtype=np.float64)
        total += float(d.sum())
        done += n
    return total / (n_samples * epsilon**2)


# ---- linear separability --------------------------------------------------------


def _binary_entropy_bits(labels: np.ndarray) -> float:
    if labels.size == 0:
        return 0.0
    p = labels.mean()
    h = 0.0
    for q in (p, 1.0 - p):
        if q > 0:
            h -= q * math.log2(q)
    return h


def _conditional_entropy_bits(labels: np.ndarray, sides: np.ndarray) -> float:
    h = 0.0
    n = labels.shape[0]
    for side in np.unique(sides):
        m = sides == side
        h += (m.sum() / n) * _binary_entropy_bits(labels[m])
    return h


def _default_svm_trainer(codes: np.ndarray, labels: np.ndarray, seed: int):
    svm = LinearSVC(random_state=seed, max_iter=5000)
    svm.fit(codes, labels)
    return svm


def separability(
    codes: np.ndarray,
    images: np.ndarray,
    classifier,
    svm_trainer=None,
    seed: int = 0,
) -> tuple[float, dict]:
    """Linear-separability score of attributes from latent codes.

    The classifier labels each image per attribute with a confidence. Per
    attribute, the most confident half of the predictions becomes a training
    set for a linear SVM from codes to labels; the score aggregates the
    conditional entropies H(label | SVM side) as ``2 ** sum(H_bits)`` (the
    exponential of the summed entropies), so one perfectly separable binary
    attribute contributes a factor 1 and an inseparable one a factor 2.
    Degenerate single-class attributes are skipped and reported.
    """
    codes = np.asarray(codes, dtype=np.float64)
    labels, conf = classifier(images)
    labels = np.asarray(labels)
    conf = np.asarray(conf)
    if labels.ndim == 1:
        labels = labels[:, None]
        conf = conf[:, None]
    n, n_attr = labels.shape
    if codes.shape[0] != n:
        raise ValueError("codes and images disagree on sample count")
    trainer = svm_trainer if svm_trainer is not None else _default_svm_trainer
    per_attr = {}
    skipped = []
    total_bits = 0.0
    for a in range(n_attr):
        keep = np.argsort(-conf[:, a], kind="stable")[: n // 2]
        y = labels[keep, a]
        if np.unique(y).size < 2:
            skipped.append(a)
            continue
        svm = trainer(codes[keep], y, seed)
        sides = np.asarray(svm.predict(codes[keep]))
        h = _conditional_entropy_bits(y, sides)
        per_attr[a] = h
        total_bits += h
    if not per_attr:
        raise ValueError("no attribute had two classes after confidence filtering")
    score = float(2.0**total_bits)
    return score, {
        "entropy_bits": per_attr,
        "skipped_attributes": skipped,
        "kept_per_attribute": n // 2,
    }


# ---- reporting -------------------------------------------------------------------


@dataclass
class MetricReport:
    """A metric value plus everything needed to reproduce it."""

    metric: str
    value: float
    sample_counts: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    extractor: str = ""
    config_hash: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "sample_counts": self.sample_counts,
            "seeds": self.seeds,
            "extractor": self.extractor,
            "config_hash": self.config_hash,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def standard_metric_values(
    gen: Generator,
    real_images: np.ndarray,
    n_samples: int = 256,
    ppl_samples: int = 64,
    seed: int = 0,
    config_hash: str = "",
) -> dict[str, MetricReport]:
    """FID, Z/W path length and separability with the bundled extractors.

    This is the instrumented set logged during training; real_images is any
    [n, res, res, 3] sample in [-1, 1].
    """
    adapter = GeneratorAdapter(gen)
    shape = adapter.image_shape
    if real_images.shape[1:] != shape:
        raise ValueError(f"real images {real_images.shape[1:]} do not match generator {shape}")
    extractor = RandomProjectionEmbedding(shape, dim=32, seed=7)
    n_real = min(n_samples, real_images.shape[0])
    fakes = adapter.sample_images(n_samples, seed=seed)
    stats_real = GaussianStats.from_samples(extractor(real_images[:n_real]))
    stats_fake = GaussianStats.from_samples(extractor(fakes))
    fid_value, fid_info = fid_details(stats_real, stats_fake)

    dist = RandomProjectionDistance(shape, dim=32, seed=11)
    ppl_z = path_length(adapter, space="z", n_samples=ppl_samples, distance=dist, seed=seed + 1)
    ppl_w = path_length(adapter, space="w", n_samples=ppl_samples, distance=dist, seed=seed + 2)

    clf = RandomProjectionClassifier(shape, n_attributes=4, seed=13)
    rng = np.random.default_rng(seed + 3)
    flat = rng.standard_normal((n_samples, adapter.latent_dim)).astype(np.float32)
    sep_imgs = adapter.render_flat(flat)
    sep_value, sep_info = separability(flat, sep_imgs, clf, seed=seed + 3)

    def report(name, value, extractor_name, details=None, counts=None):
        return MetricReport(
            metric=name,
            value=float(value),
            sample_counts=counts or {"fake": n_samples, "real": n_real},
            seeds={"seed": seed},
            extractor=extractor_name,
            config_hash=config_hash,
            details=details or {},
        )

    return {
        "fid": report("fid", fid_value, extractor.name, details=fid_info),
        "ppl_z": report("ppl_z", ppl_z, dist.name, counts={"pairs": ppl_samples}),
        "ppl_w": report("ppl_w", ppl_w, dist.name, counts={"pairs": ppl_samples}),
        "separability": report(
            "separability", sep_value, clf.name,
            details=sep_info, counts={"samples": n_samples},
        ),
    }
