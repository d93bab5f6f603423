"""End-to-end training loop: data in, checkpoints and metric curves out.

Drives a :class:`~gridgan.training.Trainer` over a cached dataset until the
images-seen budget is reached, writing checkpoints at the configured cadence
(always once at the end) and appending metric rows (FID, path lengths,
separability with the bundled extractors) to ``metrics.csv``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, restore_trainer, save_trainer
from .config import RunConfig
from .data import BatchStream, DatasetManifest
from .discriminator import Discriminator
from .metrics import standard_metric_values
from .synthesis import Generator
from .training import Trainer, TrainRun

__all__ = ["METRIC_COLUMNS", "train_loop", "append_metrics_row"]

METRIC_COLUMNS = ["images_seen", "fid", "ppl_z", "ppl_w", "separability"]


def append_metrics_row(csv_path: Path, row: dict) -> None:
    csv_path = Path(csv_path)
    new = not csv_path.exists()
    with open(csv_path, "a", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRIC_COLUMNS)
        if new:
            writer.writeheader()
        writer.writerow({k: row.get(k, "") for k in METRIC_COLUMNS})


def _metric_row(trainer: Trainer, manifest: DatasetManifest, cfg: RunConfig) -> dict:
    n = min(cfg.metrics_samples, manifest.n_images)
    res = manifest.resolution
    data = np.memmap(manifest.blob_path, dtype="<f4", mode="r",
                     shape=(manifest.n_images, res, res, 3))
    real = np.array(data[:n], dtype=np.float32)
    # evaluate the EMA snapshot when the run keeps one; it is the generator
    # a reader of the curves cares about
    eval_gen = trainer.gen_ema if trainer.gen_ema is not None else trainer.gen
    reports = standard_metric_values(
        eval_gen,
        real,
        n_samples=n,
        ppl_samples=cfg.ppl_samples,
        seed=cfg.seed + trainer.run.images_seen,
        config_hash=cfg.config_hash,
    )
    row = {name: rep.value for name, rep in reports.items()}
    row["images_seen"] = trainer.run.images_seen
    return row


def train_loop(
    cfg: RunConfig,
    manifest: DatasetManifest,
    out_dir: str | Path,
    resume_from: str | Path | None = None,
    log=print,
) -> Path:
    """Run (or resume) training; returns the final checkpoint path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_config.json").write_text(cfg.canonical_json())
    csv_path = out_dir / "metrics.csv"

    if resume_from is not None:
        bundle = load_checkpoint(resume_from, expected_structure=cfg.structure())
        trainer, data_state = restore_trainer(bundle)
        if data_state is None:
            raise ValueError("checkpoint carries no data-stream state to resume from")
        stream = BatchStream.from_state(manifest, data_state)
    else:
        gen_cfg = cfg.generator_config()
        gen = Generator(gen_cfg, init_seed=cfg.seed)
        disc = Discriminator(
            gen_cfg.output_resolution,
            gen_cfg.start_resolution,
            cfg.resolved_channels(),
            init_seed=cfg.seed + 1,
        )
        trainer = Trainer(gen, disc, cfg.train_config(), run=TrainRun(seed=cfg.seed))
        stream = BatchStream(manifest, cfg.batch_size, seed=cfg.seed, flip=cfg.flip)
        append_metrics_row(csv_path, _metric_row(trainer, manifest, cfg))

    ckpt_dir = out_dir / "checkpoint"
    next_ckpt = trainer.run.images_seen + cfg.checkpoint_every
    next_metrics = trainer.run.images_seen + cfg.metrics_every
    while trainer.run.images_seen < cfg.total_images:
        batch = next(stream)
        losses = trainer.step(batch)
        seen = trainer.run.images_seen
        if seen >= next_metrics and seen < cfg.total_images:
            append_metrics_row(csv_path, _metric_row(trainer, manifest, cfg))
            next_metrics += cfg.metrics_every
        if seen >= next_ckpt and seen < cfg.total_images:
            save_trainer(ckpt_dir, trainer, data_state=stream.state(),
                         extra={"run_config": cfg.to_dict()})
            next_ckpt += cfg.checkpoint_every
        if trainer.run.step % 200 == 0 and log is not None:
            log(
                f"step {trainer.run.step} seen {seen}: "
                f"d={losses['d_loss']:.3f} g={losses['g_loss']:.3f}"
            )

    append_metrics_row(csv_path, _metric_row(trainer, manifest, cfg))
    save_trainer(ckpt_dir, trainer, data_state=stream.state(),
                 extra={"run_config": cfg.to_dict()})
    return ckpt_dir
