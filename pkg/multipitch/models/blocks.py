"""Building blocks shared by the model families."""

import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from multipitch.datasets.patches import N_POLYPHONY_CLASSES, PATCH_FRAMES
from multipitch.signal import HARMONICS, N_BINS

N_HARMONICS = len(HARMONICS)
PREFILTER_KERNEL = 15


class InputNorm(nn.Module):
    """Layer normalization over the (harmonic, bin) plane of every frame."""

    def __init__(self):
        super().__init__()
        self.norm = nn.LayerNorm([N_HARMONICS, N_BINS])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.norm(x.transpose(1, 2)).transpose(1, 2)


def conv_block(in_channels: int, out_channels: int, kernel_size, slope: float, dropout: float, **kwargs):
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size, **kwargs),
        nn.LeakyReLU(slope),
        nn.Dropout(dropout),
    )


class Prefilter(nn.Module):
    """One 15x15 prefiltering layer, or five of them for the deep variants."""

    def __init__(self, n0: int, depth: int, residual: bool, slope: float, dropout: float):
        super().__init__()
        pad = PREFILTER_KERNEL // 2
        self.first = conv_block(N_HARMONICS, n0, PREFILTER_KERNEL, slope, dropout, padding=pad)
        self.layers = nn.ModuleList(
            conv_block(n0, n0, PREFILTER_KERNEL, slope, dropout, padding=pad)
            for _ in range(depth - 1)
        )
        self.residual = residual

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.first(x)
        for layer in self.layers:
            x = x + layer(x) if self.residual else layer(x)
        return x


class Backend(nn.Module):
    """Pitch reduction (216 -> 72 bins), time reduction (75 -> 1 frame), channel reduction."""

    def __init__(self, n0: int, n1: int, n2: int, n3: int, slope: float, dropout: float):
        super().__init__()
        self.pitch = conv_block(n0, n1, 3, slope, dropout, padding=(1, 0), stride=(1, 3))
        self.time = conv_block(n1, n2, (PATCH_FRAMES, 1), slope, dropout)
        self.channels = conv_block(n2, n3, 1, slope, dropout)
        self.out = nn.Conv2d(n3, 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.channels(self.time(self.pitch(x)))
        # [B, 1, 1, 72] -> [B, 72]
        return torch.sigmoid(self.out(x)).flatten(1)


class DoubleConv(nn.Module):
    """(conv => BN => ReLU) * 2"""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, mid_channels: Optional[int] = None):
        super().__init__()
        mid_channels = mid_channels or out_channels
        pad = kernel_size // 2
        self.block = nn.Sequential(
            nn.Conv2d(in_channels, mid_channels, kernel_size, padding=pad, bias=False),
            nn.BatchNorm2d(mid_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(mid_channels, out_channels, kernel_size, padding=pad, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.block(x)


class Down(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int):
        super().__init__()
        self.pool = nn.MaxPool2d(2)
        self.conv = DoubleConv(in_channels, out_channels, kernel_size)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(self.pool(x))


class Up(nn.Module):
    """Bilinear upsampling to the skip's size, concatenation, double convolution."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int):
        super().__init__()
        self.conv = DoubleConv(in_channels, out_channels, kernel_size, in_channels // 2)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        x = F.interpolate(x, size=skip.shape[-2:], mode="bilinear", align_corners=False)
        return self.conv(torch.cat([skip, x], dim=1))


def sinusoidal_encoding(length: int, dim: int, device=None, dtype=None) -> torch.Tensor:
    position = torch.arange(length, device=device, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, dim, 2, device=device, dtype=torch.float64) * (-math.log(10000.0) / dim)
    )
    encoding = torch.zeros(length, dim, device=device, dtype=torch.float64)
    encoding[:, 0::2] = torch.sin(position * div)
    encoding[:, 1::2] = torch.cos(position * div[: dim // 2])
    return encoding.to(dtype or torch.get_default_dtype())


class SelfAttentionStack(nn.Module):
    """Two transformer encoder blocks over the flattened (time x bin) positions."""

    def __init__(self, channels: int, hidden: int, dropout: float, n_layers: int = 2, n_heads: int = 8):
        super().__init__()
        layer = nn.TransformerEncoderLayer(
            d_model=channels,
            nhead=n_heads,
            dim_feedforward=hidden,
            dropout=dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=n_layers, enable_nested_tensor=False)
        self.use_positional_encoding = True

    def attend(self, tokens: torch.Tensor) -> torch.Tensor:
        """Encoder on a [B, L, C] token sequence."""
        if self.use_positional_encoding:
            _, length, channels = tokens.shape
            tokens = tokens + sinusoidal_encoding(length, channels, tokens.device, tokens.dtype)
        return self.encoder(tokens)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, channels, height, width = x.shape
        tokens = x.flatten(2).transpose(1, 2)
        out = self.attend(tokens)
        return out.transpose(1, 2).reshape(batch, channels, height, width)


class RecurrentStack(nn.Module):
    """BLSTM over the flattened (time x bin) bottleneck, projected back to its channels."""

    def __init__(self, channels: int, hidden: int, n_layers: int, dropout: float):
        super().__init__()
        self.lstm = nn.LSTM(
            input_size=channels,
            hidden_size=hidden,
            num_layers=n_layers,
            batch_first=True,
            bidirectional=True,
            dropout=dropout if n_layers > 1 else 0.0,
        )
        self.project = nn.Linear(2 * hidden, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, channels, height, width = x.shape
        # same token order as the self-attention stack
        sequence = x.flatten(2).transpose(1, 2)
        out, _ = self.lstm(sequence)
        out = self.project(out)
        return x + out.transpose(1, 2).reshape(batch, channels, height, width)


class PolyphonyHead(nn.Module):
    """Small two-layer CNN on the bottleneck, 24-class logits."""

    def __init__(self, channels: int, slope: float, dropout: float):
        super().__init__()
        self.conv = conv_block(channels, channels // 2, 3, slope, dropout, padding=1)
        self.out = nn.Conv2d(channels // 2, N_POLYPHONY_CLASSES, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.out(self.conv(x)).mean(dim=(2, 3))
