"""The generator: structured input tensor through an upsample/conv stack.

The spatially-variable code alone produces the input tensor and fully
determines every activation before the style-start layer. The style code is
mapped through a fully-connected network to ``w``, which drives per-channel
AdaIN modulation from the style-start layer onward. Optional per-pixel noise
(one learned scaler per feature map) is injected after each convolution in
the styled blocks.

Block layout at each resolution: [upsample], conv3x3, conv3x3, with
leaky-ReLU (slope 0.2) after each conv and a 1x1 to-RGB head plus tanh at the
end. With ``style_start`` set to a resolution R, modulation begins at the
second conv of the R block; ``"all"`` modulates every conv from the first
block, ``None`` disables modulation entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .latent import StructuredLatent
from .mapping import StructuredInputMapping
from .structure import NoiseStructure, StructureError

__all__ = [
    "ModelFailureError",
    "GeneratorConfig",
    "StyleState",
    "Generator",
    "adain",
    "receptive_cone",
    "cone_area",
]

DEFAULT_CHANNELS = {8: 128, 16: 128, 32: 64, 64: 32}


class ModelFailureError(RuntimeError):
    """Synthesis produced non-finite activations."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GeneratorConfig:
    """Architecture hyperparameters of the synthesis network."""

    structure: NoiseStructure = field(default_factory=NoiseStructure)
    output_resolution: int = 64
    channels: Mapping[int, int] = field(default_factory=lambda: dict(DEFAULT_CHANNELS))
    style_start: int | str | None = 16
    mapping_depth: int = 8
    per_pixel_noise: bool = True

    def __post_init__(self):
        s = self.structure
        if s.grid_h != s.grid_w:
            raise StructureError(
                f"synthesis needs a square grid, got {s.grid_h}x{s.grid_w}"
            )
        if not _is_pow2(s.grid_h):
            raise StructureError(f"grid side {s.grid_h} is not a power of two")
        if not _is_pow2(self.output_resolution):
            raise StructureError(
                f"output resolution {self.output_resolution} is not a power of two"
            )
        if self.output_resolution < self.start_resolution:
            raise StructureError("output resolution below the input-tensor resolution")
        missing = [r for r in self.resolutions if r not in self.channels]
        if missing:
            raise StructureError(f"channel schedule missing resolutions {missing}")
        ss = self.style_start
        if ss is None or ss == "all":
            pass
        elif isinstance(ss, int):
            if not _is_pow2(ss) or not (self.start_resolution <= ss <= self.output_resolution):
                raise StructureError(
                    f"style_start {ss} outside [{self.start_resolution}, "
                    f"{self.output_resolution}]"
                )
        else:
            raise StructureError(f"style_start must be an int, 'all' or None, got {ss!r}")
        if self.mapping_depth < 0:
            raise StructureError("mapping_depth must be >= 0")

    @property
    def start_resolution(self) -> int:
        return self.structure.grid_h

    @property
    def resolutions(self) -> tuple[int, ...]:
        n = int(math.log2(self.output_resolution // self.start_resolution)) + 1
        return tuple(self.start_resolution * 2**k for k in range(n))

    @property
    def n_convs(self) -> int:
        return 2 * len(self.resolutions)

    @property
    def first_styled_conv(self) -> int:
        """Global index of the first modulated conv; n_convs when unstyled."""
        if self.style_start is None:
            return self.n_convs
        if self.style_start == "all":
            return 0
        block = int(math.log2(self.style_start // self.start_resolution))
        return 2 * block + 1

    @property
    def styled_conv_count(self) -> int:
        return self.n_convs - self.first_styled_conv

    def conv_has_noise(self, conv_idx: int) -> bool:
        """Per-pixel noise goes after each conv of blocks at or past style start."""
        if not self.per_pixel_noise or self.style_start is None:
            return False
        if self.style_start == "all":
            return True
        block = int(math.log2(self.style_start // self.start_resolution))
        return conv_idx >= 2 * block

    def to_dict(self) -> dict:
        return {
            "structure": self.structure.to_dict(),
            "output_resolution": self.output_resolution,
            "channels": {str(k): v for k, v in self.channels.items()},
            "style_start": self.style_start,
            "mapping_depth": self.mapping_depth,
            "per_pixel_noise": self.per_pixel_noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(
            structure=NoiseStructure.from_dict(d["structure"]),
            output_resolution=int(d["output_resolution"]),
            channels={int(k): int(v) for k, v in d["channels"].items()},
            style_start=d["style_start"],
            mapping_depth=int(d["mapping_depth"]),
            per_pixel_noise=bool(d["per_pixel_noise"]),
        )


@dataclass(frozen=True)
class StyleState:
    """Mapped style latent plus the per-styled-layer affine outputs."""

    w: np.ndarray
    layer_params: tuple[tuple[np.ndarray, np.ndarray], ...]  # (gamma, beta) per styled conv


def adain(x: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor, eps: float = 1e-8) -> torch.Tensor:
    """Adaptive instance normalization.

    Per channel of each sample: normalize by the feature map's own spatial
    mean/std, then scale by ``gamma`` and shift by ``beta``. ``eps`` guards
    degenerate (constant) channels, which come out as ``beta`` everywhere.
    """
    mu = x.mean(dim=(2, 3), keepdim=True)
    sigma = x.var(dim=(2, 3), keepdim=True, unbiased=False).sqrt()
    if gamma.ndim == 1:
        gamma = gamma.view(1, -1, 1, 1)
        beta = beta.view(1, -1, 1, 1)
    elif gamma.ndim == 2:
        gamma = gamma[:, :, None, None]
        beta = beta[:, :, None, None]
    return gamma * (x - mu) / (sigma + eps) + beta


def _linear_init(linear: nn.Linear, rng: np.random.Generator, gain: float = 1.0):
    fan_in = linear.in_features
    w = rng.standard_normal(tuple(linear.weight.shape)) * (gain / math.sqrt(fan_in))
    with torch.no_grad():
        linear.weight.copy_(torch.as_tensor(w, dtype=linear.weight.dtype))
        linear.bias.zero_()


def _conv_init(conv: nn.Conv2d, rng: np.random.Generator, gain: float = math.sqrt(2.0)):
    fan_in = conv.in_channels * conv.kernel_size[0] * conv.kernel_size[1]
    w = rng.standard_normal(tuple(conv.weight.shape)) * (gain / math.sqrt(fan_in))
    with torch.no_grad():
        conv.weight.copy_(torch.as_tensor(w, dtype=conv.weight.dtype))
        conv.bias.zero_()


class Generator(nn.Module):
    """Synthesis network driven by a structured latent.

    All stochastic initialization is drawn from a private numpy generator so
    construction is reproducible without touching global RNG state.
    """

    def __init__(self, config: GeneratorConfig, init_seed: int = 0):
        super().__init__()
        self.config = config
        s = config.structure
        rng = np.random.default_rng(init_seed)

        self.input_map = StructuredInputMapping(s, config.channels[config.start_resolution], rng=rng)

        self.style_net = nn.ModuleList()
        for _ in range(config.mapping_depth):
            layer = nn.Linear(s.style_dim, s.style_dim)
            _linear_init(layer, rng)
            self.style_net.append(layer)

        self.convs = nn.ModuleList()
        self.affines = nn.ModuleDict()
        self.noise_scalers = nn.ParameterDict()
        idx = 0
        in_ch = config.channels[config.start_resolution]
        for res in config.resolutions:
            out_ch = config.channels[res]
            for _ in range(2):
                conv = nn.Conv2d(in_ch, out_ch, 3, padding=1)
                _conv_init(conv, rng)
                self.convs.append(conv)
                if idx >= config.first_styled_conv:
                    aff = nn.Linear(s.style_dim, 2 * out_ch)
                    _linear_init(aff, rng)
                    with torch.no_grad():
                        aff.bias[:out_ch] = 1.0  # gamma starts at identity
                    self.affines[str(idx)] = aff
                if config.conv_has_noise(idx):
                    self.noise_scalers[str(idx)] = nn.Parameter(torch.zeros(out_ch))
                in_ch = out_ch
                idx += 1
        self.to_rgb = nn.Conv2d(in_ch, 3, 1)
        _conv_init(self.to_rgb, rng, gain=1.0)

    # ---- style path --------------------------------------------------------

    def map_w(self, style: torch.Tensor) -> torch.Tensor:
        w = style
        for layer in self.style_net:
            w = F.leaky_relu(layer(w), 0.2)
        return w

    def map_style(self, style_code: np.ndarray) -> StyleState:
        """Map a style code to ``w`` and the per-styled-layer (gamma, beta)."""
        s = self.config.structure
        style_code = np.asarray(style_code, dtype=np.float32).ravel()
        if style_code.shape != (s.style_dim,):
            raise StructureError(f"style code must have length {s.style_dim}")
        with torch.no_grad():
            w = self.map_w(torch.as_tensor(style_code, dtype=self.dtype)[None])
            params = []
            for idx in range(self.config.first_styled_conv, self.config.n_convs):
                y = self.affines[str(idx)](w)[0]
                c = y.shape[0] // 2
                params.append((y[:c].numpy().copy(), y[c:].numpy().copy()))
        return StyleState(w=w[0].numpy().copy(), layer_params=tuple(params))

    @property
    def dtype(self) -> torch.dtype:
        return self.input_map.weight.dtype

    # ---- synthesis ----------------------------------------------------------

    def _noise_tensors(self, batch: int, rng: np.random.Generator | None):
        """One single-channel noise image per noise-bearing conv."""
        if rng is None:
            return {}
        out = {}
        res_of_conv = [r for r in self.config.resolutions for _ in range(2)]
        for idx in range(self.config.n_convs):
            if self.config.conv_has_noise(idx):
                r = res_of_conv[idx]
                n = rng.standard_normal((batch, 1, r, r))
                out[idx] = torch.as_tensor(n, dtype=self.dtype)
        return out

    def forward(
        self,
        spatial: torch.Tensor,
        style: torch.Tensor | None = None,
        w: torch.Tensor | None = None,
        noise_rng: np.random.Generator | None = None,
        collect: dict | None = None,
    ) -> torch.Tensor:
        """Render a batch.

        ``spatial`` is [B, spatial_len]; pass either raw ``style`` codes or an
        already-mapped ``w`` (used for W-space interpolation). ``collect``, if
        given, receives the input tensor, every conv activation and every
        block output keyed by ('conv', i) / ('block', res).
        """
        cfg = self.config
        if w is None and style is not None:
            w = self.map_w(style)
        if w is None and cfg.styled_conv_count > 0:
            raise StructureError("styled generator needs a style code or w")
        noise = self._noise_tensors(spatial.shape[0], noise_rng) if cfg.per_pixel_noise else {}

        x = self.input_map(spatial)
        if collect is not None:
            collect["input_tensor"] = x.detach().clone()
        idx = 0
        for b, res in enumerate(cfg.resolutions):
            if b > 0:
                x = F.interpolate(x, scale_factor=2, mode="nearest")
            for _ in range(2):
                x = self.convs[idx](x)
                if idx in noise:
                    x = x + self.noise_scalers[str(idx)].view(1, -1, 1, 1) * noise[idx]
                if idx >= cfg.first_styled_conv:
                    y = self.affines[str(idx)](w)
                    c = y.shape[1] // 2
                    x = adain(x, y[:, :c], y[:, c:])
                x = F.leaky_relu(x, 0.2)
                if collect is not None:
                    collect[("conv", idx)] = x.detach().clone()
                idx += 1
            if collect is not None:
                collect[("block", res)] = x.detach().clone()
        return torch.tanh(self.to_rgb(x))

    def synthesize(self, latent: StructuredLatent, noise_seed: int | None = None) -> np.ndarray:
        """Render one latent to an [H, W, 3] float32 image in [-1, 1]."""
        if latent.structure != self.config.structure:
            raise StructureError("latent structure does not match generator config")
        rng = None
        if self.config.per_pixel_noise:
            rng = np.random.default_rng(noise_seed)
        with torch.no_grad():
            spatial = torch.as_tensor(latent.spatial_flat, dtype=self.dtype)[None]
            style = torch.as_tensor(np.array(latent.style_code), dtype=self.dtype)[None]
            img = self.forward(spatial, style=style, noise_rng=rng)[0]
        if not torch.isfinite(img).all():
            raise ModelFailureError("generator produced non-finite activations")
        return img.permute(1, 2, 0).numpy().astype(np.float32, copy=False)

    def feature_tap(self, latent: StructuredLatent, resolution: int,
                    noise_seed: int | None = None) -> np.ndarray:
        """Activations after the block at ``resolution`` as [H, W, C]."""
        if resolution not in self.config.resolutions:
            raise StructureError(
                f"no block at resolution {resolution}; have {self.config.resolutions}"
            )
        rng = None
        if self.config.per_pixel_noise:
            rng = np.random.default_rng(noise_seed)
        collect: dict = {}
        with torch.no_grad():
            spatial = torch.as_tensor(latent.spatial_flat, dtype=self.dtype)[None]
            style = torch.as_tensor(np.array(latent.style_code), dtype=self.dtype)[None]
            self.forward(spatial, style=style, noise_rng=rng, collect=collect)
        return collect[("block", resolution)][0].permute(1, 2, 0).numpy()


# ---- receptive-field geometry ----------------------------------------------


def receptive_cone(config: GeneratorConfig, cell: tuple[int, int]) -> tuple[int, int, int, int]:
    """Output pixels reachable from one input-tensor cell.

    Follows the block layout exactly: each conv3x3 dilates the reachable
    interval by one pixel on each side, each nearest-neighbor upsample maps
    [a, b] to [2a, 2b+1]. Returns inclusive (row_lo, row_hi, col_lo, col_hi).
    """
    i, j = config.structure.check_cell(cell)

    def grow(lo: int, hi: int, res: int, first_block: bool) -> tuple[int, int]:
        if not first_block:
            lo, hi = 2 * lo, 2 * hi + 1
        lo, hi = lo - 2, hi + 2  # two 3x3 convs
        return max(lo, 0), min(hi, res - 1)

    r_lo = r_hi = i
    c_lo = c_hi = j
    for b, res in enumerate(config.resolutions):
        r_lo, r_hi = grow(r_lo, r_hi, res, b == 0)
        c_lo, c_hi = grow(c_lo, c_hi, res, b == 0)
    return r_lo, r_hi, c_lo, c_hi


def cone_area(config: GeneratorConfig, cell: tuple[int, int]) -> int:
    r_lo, r_hi, c_lo, c_hi = receptive_cone(config, cell)
    return (r_hi - r_lo + 1) * (c_hi - c_lo + 1)
