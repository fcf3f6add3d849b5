"""Recognizability of selectively encrypted images.

Measures how well a fine-tuned CNN can still classify images whose top
bitplanes were protected, by left-shifting the surviving planes into
place and standardizing before training. Accuracy per protection level
feeds the privacy side of the forensics trade-off table through the
shared report CSV schema.
"""

from .data import (ClassEntry, class_counts, class_names, export_cifar10_subset,
                   load_cifar10, read_class_manifest, read_image,
                   split_class_manifest, synthesize_class_dataset,
                   write_class_manifest, write_image)
from .errors import (DataFormatError, InvalidArgumentError, InvalidDatasetError,
                     InvalidInputError, RecognizabilityError)
from .model import ARCHITECTURES, SmallNet, build_model, head_width
from .preprocess import (CROP_SIDE, VAR_FLOOR, center_crop, preprocess_for_cnn,
                         shift_pixels, standardize)
from .report import (REPORT_COLUMNS, TASK, append_report_row, privacy_index,
                     read_report_rows)
from .training import (MIN_PER_CLASS, TrainConfig, TrainLog,
                       evaluate_recognizability, finetune, load_checkpoint,
                       save_checkpoint)

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "CROP_SIDE",
    "ClassEntry",
    "DataFormatError",
    "InvalidArgumentError",
    "InvalidDatasetError",
    "InvalidInputError",
    "MIN_PER_CLASS",
    "REPORT_COLUMNS",
    "RecognizabilityError",
    "SmallNet",
    "TASK",
    "TrainConfig",
    "TrainLog",
    "VAR_FLOOR",
    "append_report_row",
    "build_model",
    "center_crop",
    "class_counts",
    "class_names",
    "evaluate_recognizability",
    "export_cifar10_subset",
    "finetune",
    "head_width",
    "load_checkpoint",
    "load_cifar10",
    "preprocess_for_cnn",
    "privacy_index",
    "read_class_manifest",
    "read_image",
    "read_report_rows",
    "save_checkpoint",
    "shift_pixels",
    "split_class_manifest",
    "standardize",
    "synthesize_class_dataset",
    "write_class_manifest",
    "write_image",
]
