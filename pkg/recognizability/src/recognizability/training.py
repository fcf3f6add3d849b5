"""Fine-tuning and evaluation on shift-standardized images.

One model is trained per protection level s. Training is plain
cross-entropy with Adam over all layers, early-stopped on a held-out
validation slice of the train manifest; the best-epoch weights are kept.
Accuracies are seed-stable to a couple of points but never bit-exact
across library versions, unlike everything else in the pipeline.
"""

import copy
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset

from .data import class_counts, class_names, read_image
from .errors import InvalidArgumentError, InvalidDatasetError, InvalidInputError
from .model import ARCHITECTURES, build_model, head_width
from .preprocess import preprocess_for_cnn

MIN_PER_CLASS = 20


@dataclass(frozen=True)
class TrainConfig:
    s: int
    batch_size: int = 32
    learning_rate: float = 1e-4
    max_epochs: int = 20
    patience: int = 3
    val_ratio: float = 0.2
    seed: int = 0

    def validate(self):
        if not 0 <= self.s <= 8:
            raise InvalidArgumentError(f"s must be in 0..8, got {self.s}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise InvalidArgumentError("batch_size, max_epochs, patience must be >= 1")
        if not 0.0 < self.val_ratio < 1.0:
            raise InvalidArgumentError(f"val_ratio must be in (0, 1), got {self.val_ratio}")
        if self.learning_rate <= 0.0:
            raise InvalidArgumentError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = 0.0
    stopped_early: bool = False


class _ManifestDataset(Dataset):
    """Loads, shifts and standardizes one image per entry on the fly."""

    def __init__(self, entries, class_index, s):
        self.entries = entries
        self.class_index = class_index
        self.s = s

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        entry = self.entries[i]
        tensor = torch.from_numpy(preprocess_for_cnn(read_image(entry.path), self.s))
        return tensor, self.class_index[entry.cls]


def _split_validation(entries, val_ratio, seed):
    rng = np.random.default_rng(seed)
    by_class = {}
    for e in entries:
        by_class.setdefault(e.cls, []).append(e)
    fit, val = [], []
    for cls in sorted(by_class):
        members = by_class[cls]
        n_val = max(1, int(round(val_ratio * len(members))))
        order = rng.permutation(len(members))
        picked = set(order[:n_val].tolist())
        for i, member in enumerate(members):
            (val if i in picked else fit).append(member)
    return fit, val


def _accuracy(model, loader, device):
    model.eval()
    hits = 0
    total = 0
    with torch.no_grad():
        for batch, labels in loader:
            logits = model(batch.to(device))
            hits += int((logits.argmax(dim=1).cpu() == labels).sum())
            total += len(labels)
    return hits / total if total else 0.0


def finetune(train_entries, config, arch="vgg11", weights_path=None,
             device="cpu"):
    """Train a classifier on the manifest entries at protection level config.s.

    Returns (model, classes, log) where classes is the sorted class
    list baked into the head and log records per-epoch loss and
    validation accuracy.
    """
    config.validate()
    if arch not in ARCHITECTURES:
        raise InvalidArgumentError(
            f"unknown architecture {arch!r}, expected one of {ARCHITECTURES}")
    classes = class_names(train_entries)
    if len(classes) < 2:
        raise InvalidDatasetError(f"need at least 2 classes, got {len(classes)}")
    for cls, count in sorted(class_counts(train_entries).items()):
        if count < MIN_PER_CLASS:
            raise InvalidDatasetError(
                f"class {cls}: {count} images, need at least {MIN_PER_CLASS}")

    torch.manual_seed(config.seed)
    class_index = {cls: i for i, cls in enumerate(classes)}
    fit_entries, val_entries = _split_validation(
        train_entries, config.val_ratio, config.seed)
    loader_rng = torch.Generator()
    loader_rng.manual_seed(config.seed)
    fit_loader = DataLoader(
        _ManifestDataset(fit_entries, class_index, config.s),
        batch_size=config.batch_size, shuffle=True, generator=loader_rng)
    val_loader = DataLoader(
        _ManifestDataset(val_entries, class_index, config.s),
        batch_size=config.batch_size)

    model = build_model(arch, len(classes), weights_path).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    log = TrainLog()
    best_state = copy.deepcopy(model.state_dict())
    stale = 0
    for epoch in range(config.max_epochs):
        model.train()
        total_loss = 0.0
        seen = 0
        for batch, labels in fit_loader:
            optimizer.zero_grad()
            loss = loss_fn(model(batch.to(device)), labels.to(device))
            loss.backward()
            optimizer.step()
            total_loss += loss.item() * len(labels)
            seen += len(labels)
        val_acc = _accuracy(model, val_loader, device)
        log.epochs.append({"epoch": epoch, "train_loss": total_loss / seen,
                           "val_accuracy": val_acc})
        if val_acc > log.best_val_accuracy or log.best_epoch < 0:
            log.best_epoch = epoch
            log.best_val_accuracy = val_acc
            best_state = copy.deepcopy(model.state_dict())
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                log.stopped_early = True
                break
    model.load_state_dict(best_state)
    return model, classes, log


def evaluate_recognizability(model, classes, test_entries, s, batch_size=32,
                             device="cpu"):
    """Accuracy of the model on shift-standardized test images."""
    if not test_entries:
        raise InvalidInputError("empty test set")
    if head_width(model) != len(classes):
        raise InvalidInputError(
            f"model has {head_width(model)} outputs for {len(classes)} classes")
    unknown = sorted({e.cls for e in test_entries} - set(classes))
    if unknown:
        raise InvalidInputError(f"test classes not in the model: {unknown}")
    class_index = {cls: i for i, cls in enumerate(classes)}
    loader = DataLoader(_ManifestDataset(test_entries, class_index, s),
                        batch_size=batch_size)
    return _accuracy(model, loader, device)


def save_checkpoint(path, model, arch, classes, s):
    torch.save({"arch": arch, "classes": list(classes), "s": int(s),
                "state_dict": model.state_dict()}, path)


def load_checkpoint(path):
    """Rebuild (model, classes, s) from a checkpoint written by save_checkpoint."""
    from .errors import DataFormatError
    path = Path(path)
    try:
        raw = torch.load(path, map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, ValueError, EOFError,
            pickle.UnpicklingError) as exc:
        raise DataFormatError(f"{path}: cannot load checkpoint: {exc}") from None
    try:
        arch = raw["arch"]
        classes = list(raw["classes"])
        s = int(raw["s"])
        state = raw["state_dict"]
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: missing checkpoint fields: {exc}") from None
    model = build_model(arch, len(classes))
    model.load_state_dict(state)
    model.eval()
    return model, classes, s
