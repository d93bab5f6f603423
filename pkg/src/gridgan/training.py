"""Adversarial training: non-saturating logistic loss with R1 regularization.

One :class:`Trainer` owns both networks, their optimizers and all RNG state;
every stochastic draw comes from a private numpy generator so a run is fully
reproducible from its seed and resumable bit-exactly from a checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import torch
import torch.nn.functional as F

from .discriminator import Discriminator
from .synthesis import Generator

__all__ = [
    "TrainingDivergedError",
    "TrainConfig",
    "TrainRun",
    "Trainer",
    "d_logistic_loss",
    "g_nonsaturating_loss",
    "r1_penalty",
]


class TrainingDivergedError(RuntimeError):
    """A loss went non-finite; carries a diagnostic dump."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-3
    beta1: float = 0.0
    beta2: float = 0.99
    r1_gamma: float = 10.0
    r1_interval: int = 1
    batch_size: int = 32
    ema_decay: float | None = None  # hook; off by default

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class TrainRun:
    """Progress counters and provenance of one training run."""

    seed: int = 0
    images_seen: int = 0
    step: int = 0
    epoch: int = 0
    batch_in_epoch: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainRun":
        return cls(**d)


def d_logistic_loss(real_logits: torch.Tensor, fake_logits: torch.Tensor) -> torch.Tensor:
    return F.softplus(-real_logits).mean() + F.softplus(fake_logits).mean()


def g_nonsaturating_loss(fake_logits: torch.Tensor) -> torch.Tensor:
    return F.softplus(-fake_logits).mean()


def r1_penalty(disc: Discriminator, real: torch.Tensor) -> torch.Tensor:
    """E[ |grad_x D(x)|^2 ] on real images; zero for a constant discriminator."""
    real = real.detach().requires_grad_(True)
    logits = disc(real)
    (grad,) = torch.autograd.grad(logits.sum(), real, create_graph=True)
    return grad.pow(2).flatten(1).sum(1).mean()


class Trainer:
    """Single-writer owner of generator, discriminator and optimizer state."""

    def __init__(
        self,
        gen: Generator,
        disc: Discriminator,
        cfg: TrainConfig,
        run: TrainRun | None = None,
        latent_rng: np.random.Generator | None = None,
    ):
        self.gen = gen
        self.disc = disc
        self.cfg = cfg
        self.run = run if run is not None else TrainRun()
        self.latent_rng = (
            latent_rng
            if latent_rng is not None
            else np.random.default_rng(np.random.SeedSequence([self.run.seed, 1]))
        )
        self.opt_g = torch.optim.Adam(
            gen.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2)
        )
        self.opt_d = torch.optim.Adam(
            disc.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2)
        )
        self.gen_ema: Generator | None = None
        if cfg.ema_decay is not None:
            self.gen_ema = Generator(gen.config, init_seed=0)
            self.gen_ema.load_state_dict(gen.state_dict())
            self.gen_ema.requires_grad_(False)
        self._last_losses: list[dict] = []

    # ---- sampling --------------------------------------------------------

    def _draw_latents(self, batch: int) -> tuple[torch.Tensor, torch.Tensor]:
        s = self.gen.config.structure
        flat = self.latent_rng.standard_normal((batch, s.total_len), dtype=np.float32)
        z = torch.from_numpy(flat)
        return z[:, : s.style_dim], z[:, s.style_dim :]

    def _fake_batch(self, batch: int, grad: bool) -> torch.Tensor:
        style, spatial = self._draw_latents(batch)
        noise_rng = self.latent_rng if self.gen.config.per_pixel_noise else None
        if grad:
            return self.gen(spatial, style=style, noise_rng=noise_rng)
        with torch.no_grad():
            return self.gen(spatial, style=style, noise_rng=noise_rng)

    # ---- one optimization step -------------------------------------------

    def step(self, real_batch: torch.Tensor | np.ndarray) -> dict:
        """One discriminator update followed by one generator update.

        ``real_batch`` is [B, H, W, 3] (numpy, channels-last) or already a
        [B, 3, H, W] tensor. Returns the decomposed losses; raises
        :class:`TrainingDivergedError` on any non-finite loss.
        """
        if isinstance(real_batch, np.ndarray):
            real = torch.from_numpy(
                np.ascontiguousarray(real_batch.transpose(0, 3, 1, 2))
            )
        else:
            real = real_batch
        batch = real.shape[0]
        cfg = self.cfg

        # Discriminator.
        fake = self._fake_batch(batch, grad=False)
        do_r1 = cfg.r1_gamma > 0 and (self.run.step % cfg.r1_interval == 0)
        self.opt_d.zero_grad(set_to_none=True)
        if do_r1:
            real_req = real.detach().requires_grad_(True)
            real_logits = self.disc(real_req)
            (grad,) = torch.autograd.grad(
                real_logits.sum(), real_req, create_graph=True
            )
            r1_raw = grad.pow(2).flatten(1).sum(1).mean()
            penalty = (cfg.r1_gamma / 2.0) * cfg.r1_interval * r1_raw
        else:
            real_logits = self.disc(real)
            penalty = real.new_zeros(())
        fake_logits = self.disc(fake)
        d_logistic = d_logistic_loss(real_logits, fake_logits)
        d_total = d_logistic + penalty
        d_total.backward()
        self.opt_d.step()

        # Generator.
        self.opt_g.zero_grad(set_to_none=True)
        fake = self._fake_batch(batch, grad=True)
        g_loss = g_nonsaturating_loss(self.disc(fake))
        g_loss.backward()
        self.opt_g.step()

        if self.gen_ema is not None:
            decay = self.cfg.ema_decay
            with torch.no_grad():
                for p_ema, p in zip(self.gen_ema.parameters(), self.gen.parameters()):
                    p_ema.mul_(decay).add_(p, alpha=1.0 - decay)

        self.run.step += 1
        self.run.images_seen += batch
        losses = {
            "d_loss": float(d_total.detach()),
            "d_logistic": float(d_logistic.detach()),
            "d_r1_penalty": float(penalty.detach()),
            "g_loss": float(g_loss.detach()),
            "images_seen": self.run.images_seen,
        }
        self._last_losses.append(losses)
        if len(self._last_losses) > 50:
            self._last_losses.pop(0)
        if not all(np.isfinite(v) for v in losses.values()):
            raise TrainingDivergedError(
                f"non-finite loss at step {self.run.step}",
                diagnostics={
                    "step": self.run.step,
                    "images_seen": self.run.images_seen,
                    "losses": losses,
                    "recent_losses": self._last_losses[-10:],
                    "lr": cfg.lr,
                    "r1_gamma": cfg.r1_gamma,
                },
            )
        return losses

    # ---- rng state --------------------------------------------------------

    def rng_state(self) -> dict:
        return self.latent_rng.bit_generator.state

    def set_rng_state(self, state: dict) -> None:
        self.latent_rng.bit_generator.state = state
