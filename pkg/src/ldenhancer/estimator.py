"""Scikit-learn style estimators wrapping the enhancement pipeline.

``LDEnhancer.fit`` trains the parameter-inference network unsupervised on a
stack of low-light images; ``transform`` applies the interweave adjustment
with the fitted maps. ``LightDistributionLabeler`` is the stateless smooth
light-layer transformer used to build the training labels.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import weights_io
from .config import LossWeights, NetworkConfig
from .iia import interweave_adjust
from .light_label import light_label
from .losses import total_loss, weighted_total
from .network import EnhancerNet
from .training import batch_losses, epoch_permutation
from .validation import check_image_batch


def _to_tensor_batch(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(arr.astype(np.float32)).permute(0, 3, 1, 2).contiguous()


def _to_numpy_batch(tensor: torch.Tensor) -> np.ndarray:
    return tensor.permute(0, 2, 3, 1).contiguous().numpy()


class LDEnhancer(BaseEstimator, TransformerMixin):
    """Low-light image enhancer with light-distribution suppression.

    Parameters follow the training recipe defaults: AdamW with a fixed
    learning rate, unsupervised losses only, and one suppression plus one
    enhancement parameter map reused across all adjustment iterations.

    Images are (H, W, 3) float arrays in [0, 1] with sides divisible by 16;
    ``fit`` accepts an (N, H, W, 3) stack.
    """

    def __init__(
        self,
        iterations=8,
        input_size=256,
        attention_heads=2,
        ffn_hidden=32,
        estimator_channels=16,
        epochs=100,
        learning_rate=1e-6,
        weight_decay=1e-4,
        batch_size=4,
        lambda_smooth=10.0,
        spatial_weight=10.0,
        color_weight=5.0,
        smoothness_weight=1.0,
        exposure_weight=10.0,
        light_weight=1.0,
        exposure_level=0.6,
        exposure_alpha=1.0,
        smoothl1_beta=1.0,
        seed=0,
    ):
        self.iterations = iterations
        self.input_size = input_size
        self.attention_heads = attention_heads
        self.ffn_hidden = ffn_hidden
        self.estimator_channels = estimator_channels
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.lambda_smooth = lambda_smooth
        self.spatial_weight = spatial_weight
        self.color_weight = color_weight
        self.smoothness_weight = smoothness_weight
        self.exposure_weight = exposure_weight
        self.light_weight = light_weight
        self.exposure_level = exposure_level
        self.exposure_alpha = exposure_alpha
        self.smoothl1_beta = smoothl1_beta
        self.seed = seed

    def _network_config(self) -> NetworkConfig:
        return NetworkConfig(
            input_size=self.input_size,
            attention_heads=self.attention_heads,
            ffn_hidden=self.ffn_hidden,
            estimator_channels=self.estimator_channels,
            iterations=self.iterations,
            seed=self.seed,
        )

    def _loss_weights(self) -> LossWeights:
        return LossWeights(
            spatial=self.spatial_weight,
            color=self.color_weight,
            smoothness=self.smoothness_weight,
            exposure=self.exposure_weight,
            light=self.light_weight,
            exposure_level=self.exposure_level,
            exposure_alpha=self.exposure_alpha,
            smoothl1_beta=self.smoothl1_beta,
        )

    def _resize_batch(self, arr: np.ndarray) -> np.ndarray:
        if arr.shape[1] == self.input_size and arr.shape[2] == self.input_size:
            return arr
        tensor = _to_tensor_batch(arr)
        resized = torch.nn.functional.interpolate(
            tensor,
            size=(self.input_size, self.input_size),
            mode="bilinear",
            align_corners=False,
        )
        return _to_numpy_batch(resized)

    def fit(self, X, y=None):
        """Train the network unsupervised on a stack of low-light images."""
        images = self._resize_batch(check_image_batch(X))
        weights = self._loss_weights()

        labels = [light_label(img, lambda_smooth=self.lambda_smooth) for img in images]
        light = _to_tensor_batch(np.stack([p.light for p in labels]))
        residual = _to_tensor_batch(np.stack([p.residual for p in labels]))
        tensors = _to_tensor_batch(images).to(memory_format=torch.channels_last)

        net = EnhancerNet(self._network_config()).to(memory_format=torch.channels_last)
        optimizer = torch.optim.AdamW(
            net.parameters(),
            lr=self.learning_rate,
            weight_decay=self.weight_decay,
            betas=(0.9, 0.999),
            eps=1e-8,
        )
        n = tensors.shape[0]
        history = []
        for epoch in range(1, self.epochs + 1):
            net.train()
            order = epoch_permutation(self.seed, epoch, n)
            sums = np.zeros(5)
            for start in range(0, n, self.batch_size):
                idx = torch.from_numpy(order[start : start + self.batch_size].copy())
                parts = batch_losses(net, tensors[idx], light[idx], residual[idx], weights)
                total = weighted_total(*parts, weights)
                optimizer.zero_grad(set_to_none=True)
                total.backward()
                optimizer.step()
                sums += np.array([float(p.detach()) for p in parts]) * len(idx)
            means = sums / n
            history.append(total_loss(*means, weights))
        net.eval()
        # inference always runs in the default layout so a save/load
        # round-trip reproduces forward passes bit-exactly
        net = net.to(memory_format=torch.contiguous_format)
        self.net_ = net
        self.loss_history_ = history
        return self

    def _require_fitted(self) -> EnhancerNet:
        if not hasattr(self, "net_"):
            raise NotFittedError(
                "this LDEnhancer instance is not fitted yet; call fit or load_weights"
            )
        return self.net_

    def transform(self, X) -> np.ndarray:
        """Enhance images at their native resolution (sides divisible by 16)."""
        net = self._require_fitted()
        single = np.asarray(X).ndim == 3
        images = check_image_batch(X)
        tensors = _to_tensor_batch(images)
        net.eval()
        with torch.no_grad():
            maps = net(tensors)
            trace = interweave_adjust(
                tensors, maps.suppression, maps.enhancement, self.iterations
            )
        out = _to_numpy_batch(trace.final)
        return out[0] if single else out

    def enhance(self, image, return_trace: bool = False):
        """Enhance one image; optionally return the full adjustment trace."""
        net = self._require_fitted()
        tensors = _to_tensor_batch(check_image_batch(image))
        net.eval()
        with torch.no_grad():
            maps = net(tensors)
            trace = interweave_adjust(
                tensors, maps.suppression, maps.enhancement, self.iterations
            )
        if return_trace:
            return _to_numpy_batch(trace.final)[0], trace
        return _to_numpy_batch(trace.final)[0]

    def parameter_maps(self, image):
        """Suppression and enhancement maps for one image, as (H, W, 3) arrays."""
        net = self._require_fitted()
        tensors = _to_tensor_batch(check_image_batch(image))
        net.eval()
        with torch.no_grad():
            maps = net(tensors)
        return _to_numpy_batch(maps.suppression)[0], _to_numpy_batch(maps.enhancement)[0]

    def save_weights(self, path) -> None:
        net = self._require_fitted()
        weights_io.save_model_weights(net, path)
        meta = {"config": self._network_config().__dict__.copy()}
        Path(path).with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2, default=list) + "\n", encoding="utf-8"
        )

    def load_weights(self, path):
        """Load a weight archive into a network built from current parameters."""
        net = EnhancerNet(self._network_config())
        weights_io.load_model_weights(net, path)
        net.eval()
        self.net_ = net
        self.loss_history_ = []
        return self


class LightDistributionLabeler(BaseEstimator, TransformerMixin):
    """Stateless transformer extracting the smooth light layer of images."""

    def __init__(self, lambda_smooth=10.0):
        self.lambda_smooth = lambda_smooth

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        single = np.asarray(X).ndim == 3
        images = check_image_batch(X)
        light = np.stack(
            [light_label(img, lambda_smooth=self.lambda_smooth).light for img in images]
        ).astype(np.float32)
        return light[0] if single else light

    def split(self, X):
        """Return (light, residual) stacks with ``light + residual == X``."""
        single = np.asarray(X).ndim == 3
        images = check_image_batch(X)
        pairs = [light_label(img, lambda_smooth=self.lambda_smooth) for img in images]
        light = np.stack([p.light for p in pairs]).astype(np.float32)
        residual = np.stack([p.residual for p in pairs]).astype(np.float32)
        if single:
            return light[0], residual[0]
        return light, residual
