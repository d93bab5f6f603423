"""Dataset ingestion: scan, decode, crop/resize, cache, stream batches.

A directory of PNG/JPEG images is scanned in lexicographic order, each image
is center-cropped square, resized to the training resolution, mapped to
float32 in [-1, 1] and appended to a single binary cache blob (little-endian
float32, row-major, RGB). Corrupt files are skipped and reported in the
manifest rather than failing the build. Batches replay a seeded permutation
per epoch, so a stream position (epoch, index) fully determines the rest of
the stream.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["DataError", "DatasetManifest", "build_manifest", "load_manifest", "BatchStream"]

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}
MANIFEST_NAME = "manifest.json"
BLOB_NAME = "images.bin"
RECORD_LAYOUT = "float32-le row-major [res, res, 3] rgb in [-1, 1]"


class DataError(RuntimeError):
    pass


@dataclass
class DatasetManifest:
    root: str
    resolution: int
    files: list[dict]          # {"name", "sha256"} in lexicographic order
    skipped: list[dict]        # {"name", "error"}
    cache_dir: str
    record_layout: str = RECORD_LAYOUT

    @property
    def n_images(self) -> int:
        return len(self.files)

    @property
    def blob_path(self) -> Path:
        return Path(self.cache_dir) / BLOB_NAME

    @property
    def manifest_hash(self) -> str:
        """Content hash over resolution and the ordered file checksums.

        Independent of where the directory lives, so rebuilding an unchanged
        dataset yields the identical hash.
        """
        doc = {
            "resolution": self.resolution,
            "files": [[f["name"], f["sha256"]] for f in self.files],
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "resolution": self.resolution,
            "files": self.files,
            "skipped": self.skipped,
            "cache_dir": self.cache_dir,
            "record_layout": self.record_layout,
            "manifest_hash": self.manifest_hash,
        }

    def save(self) -> Path:
        out = Path(self.cache_dir) / MANIFEST_NAME
        out.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))
        return out


def load_manifest(cache_dir: str | Path) -> DatasetManifest:
    path = Path(cache_dir) / MANIFEST_NAME
    if not path.is_file():
        raise DataError(f"no dataset manifest at {path}")
    d = json.loads(path.read_text())
    m = DatasetManifest(
        root=d["root"],
        resolution=int(d["resolution"]),
        files=d["files"],
        skipped=d["skipped"],
        cache_dir=str(Path(cache_dir)),
        record_layout=d.get("record_layout", RECORD_LAYOUT),
    )
    if not m.blob_path.is_file():
        raise DataError(f"dataset cache blob missing: {m.blob_path}")
    return m


def _decode_one(path: Path, resolution: int) -> np.ndarray:
    with Image.open(path) as img:
        img = img.convert("RGB")
        w, h = img.size
        side = min(w, h)
        left = (w - side) // 2
        top = (h - side) // 2
        img = img.crop((left, top, left + side, top + side))
        img = img.resize((resolution, resolution), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float32)
    return arr / 127.5 - 1.0


def build_manifest(
    root: str | Path,
    resolution: int,
    cache_dir: str | Path | None = None,
    workers: int = 4,
) -> DatasetManifest:
    """Scan ``root``, decode every image and write the cache.

    Decoding runs on a small thread pool but results are written back in
    lexicographic order, so the cache layout is deterministic regardless of
    worker count. Raises :class:`DataError` if nothing decodable is found.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    if cache_dir is None:
        cache_dir = root.parent / f"{root.name}.cache{resolution}"
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)

    names = sorted(
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not names:
        raise DataError(f"no image files under {root}")

    def job(name: str):
        path = root / name
        try:
            arr = _decode_one(path, resolution)
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            return name, arr, digest, None
        except Exception as e:  # decode failures are data, not bugs
            return name, None, None, f"{type(e).__name__}: {e}"

    files: list[dict] = []
    skipped: list[dict] = []
    with ThreadPoolExecutor(max_workers=workers) as pool, open(cache_dir / BLOB_NAME, "wb") as blob:
        for name, arr, digest, err in pool.map(job, names):
            if err is not None:
                skipped.append({"name": name, "error": err})
                continue
            blob.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
            files.append({"name": name, "sha256": digest})
    if not files:
        raise DataError(f"no decodable images under {root} ({len(skipped)} skipped)")

    manifest = DatasetManifest(
        root=str(root),
        resolution=resolution,
        files=files,
        skipped=skipped,
        cache_dir=str(cache_dir),
    )
    manifest.save()
    return manifest


class BatchStream:
    """Deterministic shuffled batches over a cached dataset.

    Every image appears exactly once per epoch (the last batch may be short).
    With ``flip`` on, a per-image horizontal flip is drawn from the epoch's
    RNG. The (epoch, index) position is exposed for exact resume.
    """

    def __init__(
        self,
        manifest: DatasetManifest,
        batch_size: int,
        seed: int,
        flip: bool = False,
        epoch: int = 0,
        index: int = 0,
    ):
        if batch_size < 1:
            raise DataError("batch_size must be >= 1")
        self.manifest = manifest
        self.batch_size = batch_size
        self.seed = seed
        self.flip = flip
        self.epoch = epoch
        self.index = index
        n = manifest.n_images
        res = manifest.resolution
        self._data = np.memmap(
            manifest.blob_path, dtype="<f4", mode="r", shape=(n, res, res, 3)
        )
        self._load_epoch()

    def _load_epoch(self):
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, self.epoch]))
        self._perm = rng.permutation(self.manifest.n_images)
        self._flips = rng.random(self.manifest.n_images) < 0.5 if self.flip else None

    @property
    def batches_per_epoch(self) -> int:
        n = self.manifest.n_images
        return (n + self.batch_size - 1) // self.batch_size

    def state(self) -> dict:
        return {
            "seed": self.seed,
            "batch_size": self.batch_size,
            "flip": self.flip,
            "epoch": self.epoch,
            "index": self.index,
        }

    @classmethod
    def from_state(cls, manifest: DatasetManifest, state: dict) -> "BatchStream":
        return cls(
            manifest,
            batch_size=int(state["batch_size"]),
            seed=int(state["seed"]),
            flip=bool(state["flip"]),
            epoch=int(state["epoch"]),
            index=int(state["index"]),
        )

    def __iter__(self):
        return self

    def __next__(self) -> np.ndarray:
        lo = self.index * self.batch_size
        idx = self._perm[lo : lo + self.batch_size]
        batch = np.array(self._data[idx], dtype=np.float32)
        if self._flips is not None:
            for k, i in enumerate(idx):
                if self._flips[i]:
                    batch[k] = batch[k, :, ::-1, :]
        self.index += 1
        if self.index >= self.batches_per_epoch:
            self.epoch += 1
            self.index = 0
            self._load_epoch()
        return batch
