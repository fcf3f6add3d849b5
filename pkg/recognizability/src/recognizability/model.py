"""Network construction.

Two architectures: "vgg11", the torchvision VGG11 with its final linear
layer swapped for the dataset's class count (pass a state-dict path to
start from pretrained weights, since this code never downloads), and
"smallnet", a deliberately small from-scratch convnet for smoke tests
and CPU-only runs. Smallnet avoids batch normalization so identical
inputs always produce identical logits regardless of batch composition.
"""

import pickle

import torch
from torch import nn

from .errors import DataFormatError, InvalidArgumentError

ARCHITECTURES = ("vgg11", "smallnet")


class SmallNet(nn.Module):
    def __init__(self, n_classes):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 8, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(8, 16, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(4),
        )
        self.classifier = nn.Sequential(
            nn.Flatten(),
            nn.Linear(32 * 4 * 4, 64), nn.ReLU(inplace=True),
            nn.Linear(64, n_classes),
        )

    def forward(self, x):
        return self.classifier(self.features(x))


def _load_state(weights_path):
    try:
        return torch.load(weights_path, map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, ValueError, EOFError,
            pickle.UnpicklingError) as exc:
        raise DataFormatError(
            f"{weights_path}: cannot load weights: {exc}") from None


def build_model(arch, n_classes, weights_path=None):
    """Construct a classifier with n_classes outputs.

    For vgg11 the optional state dict is the stock 1000-class network
    (applied before the head swap), so ImageNet weights drop in
    directly; for smallnet it must match n_classes.
    """
    if n_classes < 2:
        raise InvalidArgumentError(f"need at least 2 classes, got {n_classes}")
    if arch == "smallnet":
        net = SmallNet(n_classes)
        if weights_path is not None:
            net.load_state_dict(_load_state(weights_path))
        return net
    if arch == "vgg11":
        import torchvision
        net = torchvision.models.vgg11(weights=None)
        if weights_path is not None:
            net.load_state_dict(_load_state(weights_path))
        net.classifier[6] = nn.Linear(net.classifier[6].in_features, n_classes)
        return net
    raise InvalidArgumentError(
        f"unknown architecture {arch!r}, expected one of {ARCHITECTURES}")


def head_width(model):
    """Number of output classes of a model built here."""
    last = list(model.modules())[-1]
    if not isinstance(last, nn.Linear):
        raise InvalidArgumentError("model does not end in a linear layer")
    return last.out_features
