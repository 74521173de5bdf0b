from typing import Optional, Tuple

import torch
from torch import nn

from multipitch.models.blocks import N_HARMONICS, DoubleConv, Down, Up

# (width multiple of gamma, kernel size) per encoder level
ENCODER = ((1, 15), (2, 15), (4, 9), (8, 5), (8, 3))


class UNet(nn.Module):
    """U-net front-end: 6 harmonics in, ``n0`` channels out at full resolution.

    ``bottleneck`` and ``skip`` are optional sequence modules applied to the
    lowest level and to the lowest skip connection. ``forward`` returns the
    output together with the (processed) bottleneck so a second head can
    read it.
    """

    def __init__(
        self,
        gamma: int,
        n0: int,
        bottleneck: Optional[nn.Module] = None,
        skip: Optional[nn.Module] = None,
    ):
        super().__init__()
        widths = [gamma * m for m, _ in ENCODER]
        kernels = [k for _, k in ENCODER]

        self.inc = DoubleConv(N_HARMONICS, widths[0], kernels[0])
        self.down1 = Down(widths[0], widths[1], kernels[1])
        self.down2 = Down(widths[1], widths[2], kernels[2])
        self.down3 = Down(widths[2], widths[3], kernels[3])
        self.down4 = Down(widths[3], widths[4], kernels[4])

        self.up1 = Up(widths[4] + widths[3], widths[2], kernels[4])
        self.up2 = Up(widths[2] + widths[2], widths[1], kernels[3])
        self.up3 = Up(widths[1] + widths[1], widths[0], kernels[2])
        self.up4 = Up(widths[0] + widths[0], n0, kernels[0])

        self.bottleneck = bottleneck
        self.skip = skip
        self.bottleneck_channels = widths[4]

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        x0 = self.inc(x)
        x1 = self.down1(x0)
        x2 = self.down2(x1)
        x3 = self.down3(x2)
        x4 = self.down4(x3)

        if self.bottleneck is not None:
            x4 = self.bottleneck(x4)
        if self.skip is not None:
            x3 = self.skip(x3)

        x = self.up1(x4, x3)
        x = self.up2(x, x2)
        x = self.up3(x, x1)
        x = self.up4(x, x0)
        return x, x4
