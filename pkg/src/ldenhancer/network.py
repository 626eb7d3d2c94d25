"""Trainable blocks of the enhancer network.

The network splits a downsampled feature map into a light-distribution part
and a content part, refines the content against the light features with
cross-attention, decodes the light features back to image resolution, and
estimates one suppression and one enhancement parameter map from the two
full-resolution maps.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import NetworkConfig


def sinusoidal_position_grid(height, width, channels, dtype=torch.float32, device=None):
    """Fixed 2-D sin/cos positional encoding flattened row-major to (h*w, C).

    The first half of the channels encodes the row index, the second half the
    column index.
    """
    if channels % 4 != 0:
        raise ValueError("positional encoding requires channels divisible by 4")
    half = channels // 2

    def axis(n, d):
        pos = torch.arange(n, dtype=torch.float64)[:, None]
        freq_idx = torch.arange(0, d, 2, dtype=torch.float64)
        inv_freq = torch.exp(-math.log(10000.0) * freq_idx / d)
        angle = pos * inv_freq[None, :]
        enc = torch.empty(n, d, dtype=torch.float64)
        enc[:, 0::2] = torch.sin(angle)
        enc[:, 1::2] = torch.cos(angle)
        return enc

    rows = axis(height, half)
    cols = axis(width, half)
    grid = torch.cat(
        [
            rows[:, None, :].expand(height, width, half),
            cols[None, :, :].expand(height, width, half),
        ],
        dim=-1,
    )
    return grid.reshape(height * width, channels).to(dtype=dtype, device=device)


class ConvNormRelu(nn.Module):
    """2x2 stride-2 convolution, batch norm, ReLU: one downsampling stage."""

    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=2, stride=2)
        self.norm = nn.BatchNorm2d(out_channels)

    def forward(self, x):
        return F.relu(self.norm(self.conv(x)))


class DeconvNormRelu(nn.Module):
    """2x2 stride-2 transposed convolution, batch norm, ReLU: one upsampling stage."""

    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.deconv = nn.ConvTranspose2d(in_channels, out_channels, kernel_size=2, stride=2)
        self.norm = nn.BatchNorm2d(out_channels)

    def forward(self, x):
        return F.relu(self.norm(self.deconv(x)))


class FeatureExtractor(nn.Module):
    """Four downsampling stages, overall stride 16."""

    def __init__(self, channels=(4, 4, 8, 8)):
        super().__init__()
        chain = (3,) + tuple(channels)
        self.stages = nn.ModuleList(
            ConvNormRelu(chain[i], chain[i + 1]) for i in range(4)
        )

    def forward(self, x, intermediates: Optional[dict] = None):
        names = ("down1", "down2", "down3", "features")
        for name, stage in zip(names, self.stages):
            x = stage(x)
            if intermediates is not None:
                intermediates[name] = x
        return x


class CrossAttention(nn.Module):
    """Multi-head scaled dot-product attention over feature tokens."""

    def __init__(self, dim, heads):
        super().__init__()
        if dim % heads != 0:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.query_proj = nn.Linear(dim, dim, bias=False)
        self.key_proj = nn.Linear(dim, dim, bias=False)
        self.value_proj = nn.Linear(dim, dim, bias=False)
        self.out_proj = nn.Linear(dim, dim, bias=False)

    def forward(self, query, key, value, return_weights=False):
        b, t, c = query.shape
        if key.shape != query.shape or value.shape != query.shape:
            raise ValueError("query, key, and value must share one token shape")

        def split(x, proj):
            return proj(x).reshape(b, t, self.heads, self.head_dim).transpose(1, 2)

        q = split(query, self.query_proj)
        k = split(key, self.key_proj)
        v = split(value, self.value_proj)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        weights = scores.softmax(dim=-1)
        mixed = (weights @ v).transpose(1, 2).reshape(b, t, c)
        out = self.out_proj(mixed)
        if return_weights:
            return out, weights
        return out


class ContentRefiner(nn.Module):
    """Refines content features against light features, then upsamples to a
    full-resolution content map.

    The content tokens act as queries and the light tokens as keys and
    values; the fixed positional encoding is added to queries and keys only.
    """

    def __init__(self, config: NetworkConfig):
        super().__init__()
        dim = config.attention_dim
        self.attention = CrossAttention(dim, config.attention_heads)
        self.attn_norm = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, config.ffn_hidden),
            nn.ReLU(),
            nn.Linear(config.ffn_hidden, dim),
        )
        self.ffn_norm = nn.LayerNorm(dim)
        chain = (dim,) + tuple(config.decoder_channels)
        self.upsample = nn.ModuleList(
            DeconvNormRelu(chain[i], chain[i + 1]) for i in range(3)
        )
        # final stage is a plain deconvolution so the content map is not
        # constrained to be non-negative
        self.output = nn.ConvTranspose2d(chain[3], chain[4], kernel_size=2, stride=2)
        self._pos_cache = {}

    def _position_grid(self, h, w, dtype, device):
        key = (h, w, dtype, str(device))
        if key not in self._pos_cache:
            self._pos_cache[key] = sinusoidal_position_grid(
                h, w, self.attention.dim, dtype=dtype, device=device
            )
        return self._pos_cache[key]

    def forward(self, content, light, intermediates: Optional[dict] = None):
        if content.shape != light.shape:
            raise ValueError("content and light features must share one shape")
        b, c, h, w = content.shape
        pos = self._position_grid(h, w, content.dtype, content.device)
        content_tokens = content.flatten(2).transpose(1, 2)
        light_tokens = light.flatten(2).transpose(1, 2)
        mixed = self.attention(content_tokens + pos, light_tokens + pos, light_tokens)
        y = self.attn_norm(mixed + content_tokens)
        z = self.ffn_norm(self.ffn(y) + y)
        x = z.transpose(1, 2).reshape(b, c, h, w)
        if intermediates is not None:
            intermediates["attention_mix"] = mixed
            intermediates["refined_tokens"] = z
        for i, stage in enumerate(self.upsample, start=1):
            x = stage(x)
            if intermediates is not None:
                intermediates[f"up{i}"] = x
        return self.output(x)


class LightDecoder(nn.Module):
    """Four upsampling stages decoding light features to image resolution.

    Every stage ends in ReLU, so the decoded light map is non-negative.
    """

    def __init__(self, config: NetworkConfig):
        super().__init__()
        chain = (config.attention_dim,) + tuple(config.decoder_channels)
        self.stages = nn.ModuleList(
            DeconvNormRelu(chain[i], chain[i + 1]) for i in range(4)
        )

    def forward(self, x, intermediates: Optional[dict] = None):
        names = ("dec1", "dec2", "dec3", "light_map")
        for name, stage in zip(names, self.stages):
            x = stage(x)
            if intermediates is not None:
                intermediates[name] = x
        return x


class ParameterEstimator(nn.Module):
    """Five-layer map head with skip concatenations and a tanh output."""

    def __init__(self, channels=16):
        super().__init__()
        c = channels
        self.conv1 = nn.Conv2d(3, c, kernel_size=3, stride=1, padding=1)
        self.conv2 = nn.Conv2d(c, c, kernel_size=3, stride=1, padding=1)
        self.conv3 = nn.Conv2d(c, c, kernel_size=3, stride=1, padding=1)
        self.conv4 = nn.Conv2d(2 * c, c, kernel_size=3, stride=1, padding=1)
        self.output = nn.Conv2d(2 * c, 3, kernel_size=3, stride=1, padding=1)

    def forward(self, x, intermediates: Optional[dict] = None, tag: str = ""):
        x1 = F.relu(self.conv1(x))
        x2 = F.relu(self.conv2(x1))
        x3 = F.relu(self.conv3(x2))
        cat1 = torch.cat([x3, x2], dim=1)
        x4 = F.relu(self.conv4(cat1))
        cat2 = torch.cat([x4, x1], dim=1)
        out = torch.tanh(self.output(cat2))
        if intermediates is not None:
            intermediates[f"{tag}conv1"] = x1
            intermediates[f"{tag}conv2"] = x2
            intermediates[f"{tag}conv3"] = x3
            intermediates[f"{tag}skip1"] = cat1
            intermediates[f"{tag}conv4"] = x4
            intermediates[f"{tag}skip2"] = cat2
        return out


class ForwardMaps(NamedTuple):
    suppression: torch.Tensor
    enhancement: torch.Tensor
    light_map: torch.Tensor
    content_map: torch.Tensor
    intermediates: Optional[dict]


class EnhancerNet(nn.Module):
    """Full parameter-inference network.

    ``forward`` takes an (N, 3, H, W) batch in [0, 1] with H and W divisible
    by 16, and returns the suppression and enhancement parameter maps (both
    tanh-bounded) together with the decoded light map.
    """

    def __init__(self, config: Optional[NetworkConfig] = None):
        super().__init__()
        self.config = config or NetworkConfig()
        dim = self.config.attention_dim
        self.extractor = FeatureExtractor(self.config.extractor_channels)
        self.decomposition = nn.Conv2d(dim, dim, kernel_size=1)
        self.refiner = ContentRefiner(self.config)
        self.light_decoder = LightDecoder(self.config)
        self.suppression_head = ParameterEstimator(self.config.estimator_channels)
        self.enhancement_head = ParameterEstimator(self.config.estimator_channels)
        self.reset_parameters(self.config.seed)

    def reset_parameters(self, seed: int) -> None:
        """Deterministic initialization.

        Hidden conv and linear weights are fan-in scaled (std sqrt(2/fan_in))
        so activations keep their magnitude through the ReLU stacks; all
        biases start at zero. The two map-head output layers start at exactly
        zero, so an untrained model predicts all-zero parameter maps and the
        adjustment is the identity: every later change in behavior is
        learned, not initialization noise.
        """
        generator = torch.Generator().manual_seed(seed)
        zero_init = {id(self.suppression_head.output), id(self.enhancement_head.output)}
        for module in self.modules():
            if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
                with torch.no_grad():
                    if id(module) in zero_init:
                        module.weight.zero_()
                    else:
                        if isinstance(module, nn.ConvTranspose2d):
                            # transposed conv fans in over the input channels
                            fan_in = module.weight.shape[0] * module.weight.shape[2] * module.weight.shape[3]
                        elif isinstance(module, nn.Conv2d):
                            fan_in = module.weight.shape[1] * module.weight.shape[2] * module.weight.shape[3]
                        else:
                            fan_in = module.weight.shape[1]
                        module.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=generator)
                    if module.bias is not None:
                        module.bias.zero_()
            elif isinstance(module, (nn.BatchNorm2d, nn.LayerNorm)):
                module.reset_parameters()
                if isinstance(module, nn.BatchNorm2d):
                    module.reset_running_stats()

    def _validate(self, images: torch.Tensor) -> None:
        if images.ndim != 4 or images.shape[1] != 3:
            raise ValueError(f"expected (N, 3, H, W) input, got {tuple(images.shape)}")
        if images.shape[2] % 16 != 0 or images.shape[3] % 16 != 0:
            raise ValueError(
                f"spatial dims {tuple(images.shape[2:])} must be divisible by 16"
            )
        if not torch.isfinite(images).all():
            raise ValueError("input contains non-finite values")

    def forward(self, images: torch.Tensor, return_intermediates: bool = False) -> ForwardMaps:
        self._validate(images)
        inter = {} if return_intermediates else None
        features = self.extractor(images, inter)
        light_features = self.decomposition(features)
        content_features = features - light_features
        if inter is not None:
            inter["light_features"] = light_features
            inter["content_features"] = content_features
        content_map = self.refiner(content_features, light_features, inter)
        light_map = self.light_decoder(light_features, inter)
        suppression = self.suppression_head(light_map, inter, tag="suppression.")
        enhancement = self.enhancement_head(content_map, inter, tag="enhancement.")
        if inter is not None:
            inter["content_map"] = content_map
        return ForwardMaps(suppression, enhancement, light_map, content_map, inter)
