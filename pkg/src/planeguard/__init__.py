"""Selective bitplane encryption with clear-plane forensics.

planeguard encrypts the s most significant bitplanes of grayscale
images with a ChaCha20 keystream, extracts rich-model residual features
from the remaining clear planes, trains a ridge-regression tampering
detector, and reports how detection accuracy trades against the privacy
gained by encrypting more planes.
"""

__version__ = "0.1.0"

from .bitplanes import (
    EncryptionParams,
    encrypt_planes,
    shift_planes,
    to_luminance,
    zero_planes,
)
from .classifier import (
    LabeledFeatureSet,
    LsmrResult,
    RidgeModel,
    cv_lambda,
    decision_scores,
    evaluate,
    load_model,
    lsmr_solve,
    predict,
    save_model,
    train,
)
from .errors import (
    DataFormatError,
    DegenerateInputError,
    InvalidArgumentError,
    InvalidInputError,
    InvalidTrainingSetError,
    PlaneguardError,
)
from .experiments import (
    DatasetManifest,
    ExperimentConfig,
    ManifestEntry,
    ReportRow,
    ingest_manifest,
    privacy_index,
    run_forensics_experiment,
    split,
    synthesize_dataset,
    tradeoff_report,
)
from .features import (
    FEATURE_DIM,
    ROSTER,
    extract_features,
    read_feature_file,
    roster_hash,
    roster_manifest,
    write_feature_file,
)
from .keystream import KeystreamSpec, derive_nonce, keystream_bits, keystream_bytes
from .residuals import ResidualMap, directional_residual, kernel_residual

__all__ = [
    "__version__",
    "DataFormatError",
    "DatasetManifest",
    "DegenerateInputError",
    "EncryptionParams",
    "ExperimentConfig",
    "FEATURE_DIM",
    "InvalidArgumentError",
    "InvalidInputError",
    "InvalidTrainingSetError",
    "KeystreamSpec",
    "LabeledFeatureSet",
    "LsmrResult",
    "ManifestEntry",
    "PlaneguardError",
    "ReportRow",
    "ResidualMap",
    "RidgeModel",
    "ROSTER",
    "cv_lambda",
    "decision_scores",
    "derive_nonce",
    "directional_residual",
    "encrypt_planes",
    "evaluate",
    "extract_features",
    "ingest_manifest",
    "kernel_residual",
    "keystream_bits",
    "keystream_bytes",
    "load_model",
    "lsmr_solve",
    "predict",
    "privacy_index",
    "read_feature_file",
    "roster_hash",
    "roster_manifest",
    "run_forensics_experiment",
    "save_model",
    "shift_planes",
    "split",
    "synthesize_dataset",
    "to_luminance",
    "tradeoff_report",
    "train",
    "write_feature_file",
    "zero_planes",
]
