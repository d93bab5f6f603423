"""Mirror-image downsampling discriminator.

Standard conv classifier shaped to undo the generator pyramid: from-RGB at
the output resolution, two 3x3 convs plus average-pool per resolution down
to half the input-tensor size, then a dense head producing one realness
logit per image.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .structure import StructureError
from .synthesis import _conv_init, _linear_init

__all__ = ["Discriminator"]


class Discriminator(nn.Module):
    def __init__(
        self,
        resolution: int,
        base_resolution: int,
        channels: dict[int, int],
        init_seed: int = 0,
    ):
        super().__init__()
        if resolution < base_resolution:
            raise StructureError("discriminator resolution below base resolution")
        self.resolution = resolution
        self.base_resolution = base_resolution
        rng = np.random.default_rng(init_seed)
        resolutions = []
        r = resolution
        while r >= base_resolution:
            resolutions.append(r)
            r //= 2
        self.resolutions = tuple(resolutions)  # fine to coarse

        self.from_rgb = nn.Conv2d(3, channels[resolution], 1)
        _conv_init(self.from_rgb, rng, gain=1.0)
        self.convs = nn.ModuleList()
        for res in self.resolutions:
            c = channels[res]
            c_next = channels[res // 2] if res // 2 >= base_resolution else c
            conv1 = nn.Conv2d(c, c, 3, padding=1)
            conv2 = nn.Conv2d(c, c_next, 3, padding=1)
            _conv_init(conv1, rng)
            _conv_init(conv2, rng)
            self.convs.extend([conv1, conv2])
        final_res = base_resolution // 2
        final_ch = channels[base_resolution]
        self.head = nn.Linear(final_ch * final_res * final_res, 1)
        _linear_init(self.head, rng, gain=1.0)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """[B, 3, H, W] in [-1, 1] -> [B] realness logits."""
        if images.shape[-1] != self.resolution or images.shape[-2] != self.resolution:
            raise StructureError(
                f"discriminator expects {self.resolution}x{self.resolution} images, "
                f"got {tuple(images.shape)}"
            )
        x = self.from_rgb(images)
        i = 0
        for _ in self.resolutions:
            x = F.leaky_relu(self.convs[i](x), 0.2)
            i += 1
            x = F.leaky_relu(self.convs[i](x), 0.2)
            i += 1
            x = F.avg_pool2d(x, 2)
        return self.head(x.flatten(1))[:, 0]
