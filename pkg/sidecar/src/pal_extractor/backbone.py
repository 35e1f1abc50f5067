"""Pretrained CNN backbones with the classification head removed.

The reference configuration is an ImageNet-pretrained ResNet with its
final fully connected layer replaced by identity, so the forward pass
ends at the global average pool. When the pretrained weights cannot be
fetched (offline hosts), the same architecture is used with a fixed-seed
random initialization and a logged warning; descriptors stay deterministic
either way. A ``:random`` suffix (e.g. ``resnet18:random``) skips the
weight fetch outright.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
from torchvision.models import get_model

log = logging.getLogger(__name__)

_RESNET_DIMS = {"resnet18": 512, "resnet34": 512, "resnet50": 2048}
_FALLBACK_SEED = 1806

# ImageNet channel statistics, applied to [0, 1] RGB input
_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
_STD = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)

_CACHE: dict[str, "Backbone"] = {}


@dataclass(frozen=True)
class Backbone:
    name: str
    dim: int
    pretrained: bool
    model: torch.nn.Module

    def embed(self, parts_rgb: np.ndarray) -> np.ndarray:
        """(n, S, S, 3) float32 RGB in [0, 1] -> (n, dim) float32."""
        x = torch.from_numpy(np.ascontiguousarray(parts_rgb))
        x = x.permute(0, 3, 1, 2)
        x = (x - _MEAN) / _STD
        with torch.no_grad():
            out = self.model(x)
        return out.numpy().astype(np.float32)


def load_backbone(name: str) -> Backbone:
    """Resolve a backbone identifier to a ready-to-run embedder."""
    if name in _CACHE:
        return _CACHE[name]
    base, _, variant = name.partition(":")
    if base not in _RESNET_DIMS:
        raise ValueError(
            f"unknown backbone {name!r}; available: "
            f"{', '.join(sorted(_RESNET_DIMS))} (optionally with :random)"
        )
    if variant not in ("", "random"):
        raise ValueError(f"unknown backbone variant {variant!r} in {name!r}")

    model = None
    pretrained = False
    if variant != "random":
        try:
            model = get_model(base, weights="IMAGENET1K_V1")
            pretrained = True
        except Exception as exc:
            log.warning(
                "pretrained weights for %s unavailable (%s); "
                "falling back to a fixed-seed random initialization",
                base, exc,
            )
    if model is None:
        torch.manual_seed(_FALLBACK_SEED)
        model = get_model(base, weights=None)
    model.fc = torch.nn.Identity()
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)

    backbone = Backbone(
        name=name, dim=_RESNET_DIMS[base], pretrained=pretrained, model=model
    )
    _CACHE[name] = backbone
    return backbone
