"""Checkpoint directory format.

A checkpoint is a directory holding ``manifest.json`` (configs, counters,
RNG states and a tensor index) plus ``tensors.bin``, a single blob with every
tensor's raw bytes. Each tensor is checksummed individually; loading
verifies checksums and the format version before anything is instantiated,
so a corrupt or mismatched archive never produces a partial load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .discriminator import Discriminator
from .structure import NoiseStructure
from .synthesis import Generator, GeneratorConfig
from .training import TrainConfig, Trainer, TrainRun

__all__ = ["CheckpointError", "CheckpointBundle", "save_checkpoint", "load_checkpoint",
           "save_trainer", "restore_trainer", "load_generator"]

FORMAT = "gridgan-checkpoint/1"
MANIFEST = "manifest.json"
BLOB = "tensors.bin"

_DTYPES = {
    "torch.float32": torch.float32,
    "torch.float64": torch.float64,
    "torch.int64": torch.int64,
    "torch.int32": torch.int32,
    "torch.uint8": torch.uint8,
    "torch.bool": torch.bool,
}


class CheckpointError(RuntimeError):
    pass


# ---- tensor-tree packing ----------------------------------------------------


def _pack(obj, name: str, tensors: dict):
    """Split a state tree into a JSON skeleton plus a flat tensor dict."""
    if isinstance(obj, torch.Tensor):
        tensors[name] = obj.detach().cpu().contiguous()
        return {"__tensor__": name}
    if isinstance(obj, dict):
        if all(isinstance(k, str) for k in obj):
            return {k: _pack(v, f"{name}.{k}", tensors) for k, v in obj.items()}
        return {
            "__nonstr_keys__": True,
            "items": [[k, _pack(v, f"{name}.{k}", tensors)] for k, v in obj.items()],
        }
    if isinstance(obj, (list, tuple)):
        return [_pack(v, f"{name}.{i}", tensors) for i, v in enumerate(obj)]
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    raise CheckpointError(f"cannot serialize {type(obj).__name__} at {name}")


def _unpack(skel, tensors: dict):
    if isinstance(skel, dict):
        if "__tensor__" in skel:
            return tensors[skel["__tensor__"]]
        if skel.get("__nonstr_keys__"):
            return {k: _unpack(v, tensors) for k, v in skel["items"]}
        return {k: _unpack(v, tensors) for k, v in skel.items()}
    if isinstance(skel, list):
        return [_unpack(v, tensors) for v in skel]
    return skel


def _write_blob(path: Path, tensors: dict) -> list[dict]:
    index = []
    offset = 0
    with open(path, "wb") as f:
        for name in sorted(tensors):
            t = tensors[name]
            raw = t.numpy().tobytes()
            f.write(raw)
            index.append(
                {
                    "name": name,
                    "dtype": str(t.dtype),
                    "shape": list(t.shape),
                    "offset": offset,
                    "nbytes": len(raw),
                    "sha256": hashlib.sha256(raw).hexdigest(),
                }
            )
            offset += len(raw)
    return index


def _read_blob(path: Path, index: list[dict]) -> dict:
    tensors = {}
    raw = path.read_bytes()
    for entry in index:
        chunk = raw[entry["offset"] : entry["offset"] + entry["nbytes"]]
        if hashlib.sha256(chunk).hexdigest() != entry["sha256"]:
            raise CheckpointError(f"checksum mismatch for tensor {entry['name']}")
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"unsupported tensor dtype {entry['dtype']}")
        t = torch.frombuffer(bytearray(chunk), dtype=dtype).reshape(entry["shape"])
        tensors[entry["name"]] = t.clone()
    return tensors


# ---- public API --------------------------------------------------------------


@dataclass
class CheckpointBundle:
    gen_config: GeneratorConfig
    train_config: TrainConfig
    run: TrainRun
    gen_state: dict
    disc_state: dict | None
    opt_g_state: dict | None
    opt_d_state: dict | None
    ema_state: dict | None
    rng_states: dict
    extra: dict


def save_checkpoint(
    path: str | Path,
    *,
    gen: Generator,
    disc: Discriminator | None = None,
    opt_g=None,
    opt_d=None,
    gen_ema: Generator | None = None,
    train_config: TrainConfig | None = None,
    run: TrainRun | None = None,
    rng_states: dict | None = None,
    extra: dict | None = None,
) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tensors: dict = {}
    skeletons = {
        "gen": _pack(gen.state_dict(), "gen", tensors),
        "disc": _pack(disc.state_dict(), "disc", tensors) if disc is not None else None,
        "opt_g": _pack(opt_g.state_dict(), "opt_g", tensors) if opt_g is not None else None,
        "opt_d": _pack(opt_d.state_dict(), "opt_d", tensors) if opt_d is not None else None,
        "gen_ema": _pack(gen_ema.state_dict(), "gen_ema", tensors) if gen_ema is not None else None,
    }
    index = _write_blob(path / BLOB, tensors)
    manifest = {
        "format": FORMAT,
        "generator_config": gen.config.to_dict(),
        "train_config": (train_config or TrainConfig()).to_dict(),
        "run": (run or TrainRun()).to_dict(),
        "rng_states": rng_states or {},
        "extra": extra or {},
        "skeletons": skeletons,
        "blob": BLOB,
        "tensors": index,
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def load_checkpoint(path: str | Path, expected_structure: NoiseStructure | None = None) -> CheckpointBundle:
    path = Path(path)
    manifest_path = path / MANIFEST
    if not manifest_path.is_file():
        raise CheckpointError(f"no checkpoint manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != FORMAT:
        raise CheckpointError(
            f"checkpoint format {manifest.get('format')!r} not supported (want {FORMAT})"
        )
    gen_config = GeneratorConfig.from_dict(manifest["generator_config"])
    if expected_structure is not None and gen_config.structure != expected_structure:
        raise CheckpointError(
            "checkpoint noise structure does not match the expected structure"
        )
    tensors = _read_blob(path / manifest["blob"], manifest["tensors"])
    sk = manifest["skeletons"]
    return CheckpointBundle(
        gen_config=gen_config,
        train_config=TrainConfig.from_dict(manifest["train_config"]),
        run=TrainRun.from_dict(manifest["run"]),
        gen_state=_unpack(sk["gen"], tensors),
        disc_state=_unpack(sk["disc"], tensors) if sk["disc"] is not None else None,
        opt_g_state=_unpack(sk["opt_g"], tensors) if sk["opt_g"] is not None else None,
        opt_d_state=_unpack(sk["opt_d"], tensors) if sk["opt_d"] is not None else None,
        ema_state=_unpack(sk["gen_ema"], tensors) if sk["gen_ema"] is not None else None,
        rng_states=manifest["rng_states"],
        extra=manifest.get("extra", {}),
    )


def save_trainer(path: str | Path, trainer: Trainer, data_state: dict | None = None,
                 extra: dict | None = None) -> Path:
    rng_states = {"latent_rng": trainer.rng_state()}
    if data_state is not None:
        rng_states["data_stream"] = data_state
    return save_checkpoint(
        path,
        gen=trainer.gen,
        disc=trainer.disc,
        opt_g=trainer.opt_g,
        opt_d=trainer.opt_d,
        gen_ema=trainer.gen_ema,
        train_config=trainer.cfg,
        run=trainer.run,
        rng_states=rng_states,
        extra=extra,
    )


def restore_trainer(bundle: CheckpointBundle) -> tuple[Trainer, dict | None]:
    """Rebuild a trainer mid-run; returns it plus the saved data-stream state."""
    gen = Generator(bundle.gen_config, init_seed=0)
    gen.load_state_dict(bundle.gen_state)
    disc = Discriminator(
        bundle.gen_config.output_resolution,
        bundle.gen_config.start_resolution,
        dict(bundle.gen_config.channels),
        init_seed=0,
    )
    if bundle.disc_state is None:
        raise CheckpointError("checkpoint has no discriminator state to resume from")
    disc.load_state_dict(bundle.disc_state)
    trainer = Trainer(gen, disc, bundle.train_config, run=bundle.run)
    if bundle.opt_g_state is not None:
        trainer.opt_g.load_state_dict(bundle.opt_g_state)
    if bundle.opt_d_state is not None:
        trainer.opt_d.load_state_dict(bundle.opt_d_state)
    if bundle.ema_state is not None and trainer.gen_ema is not None:
        trainer.gen_ema.load_state_dict(bundle.ema_state)
    if "latent_rng" in bundle.rng_states:
        trainer.set_rng_state(_decode_rng_state(bundle.rng_states["latent_rng"]))
    return trainer, bundle.rng_states.get("data_stream")


def _decode_rng_state(state: dict) -> dict:
    # json round-trips numpy bit-generator states losslessly (python ints are
    # arbitrary precision); nothing to decode today, kept as a seam.
    return state


def load_generator(path: str | Path, expected_structure: NoiseStructure | None = None) -> tuple[Generator, CheckpointBundle]:
    bundle = load_checkpoint(path, expected_structure=expected_structure)
    gen = Generator(bundle.gen_config, init_seed=0)
    gen.load_state_dict(bundle.gen_state)
    gen.eval()
    return gen, bundle
