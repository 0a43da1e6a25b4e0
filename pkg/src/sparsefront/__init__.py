"""Sparsifying front-end defense for linear classifiers under bounded
max-norm perturbations: transforms, attacks, a support-preservation
certificate, Monte-Carlo verification of the ensemble-averaged theory,
and MNIST digit-pair experiments.
"""

from .basis import (
    Basis,
    BasisInfo,
    Cdf97Basis,
    DctBasis,
    IdentityBasis,
    RandomOrthonormalBasis,
    haar_columns,
    make_basis,
)
from .frontend import (
    FrontEndConfig,
    SnrReport,
    SupportSet,
    apply_front_end,
    check_high_snr,
    proj,
    sparse_k,
    support,
)
from .attacks import (
    AttackKind,
    AttackReport,
    attack_baseline,
    attack_semi_white,
    attack_white,
    directed_perturbation,
    measured_distortion,
)
from .dataio import (
    DataError,
    DatasetConsistencyError,
    IdxFormatError,
    PairDataset,
    RawDataset,
    load_idx,
    make_pair_dataset,
    normalize_pixels,
    save_idx,
)
from .svm import (
    EvalResult,
    LinearModel,
    TrainConfig,
    TrainingError,
    evaluate,
    load_model,
    save_model,
    train,
)
from .ensemble import WeightModel

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BasisInfo",
    "Cdf97Basis",
    "DctBasis",
    "IdentityBasis",
    "RandomOrthonormalBasis",
    "haar_columns",
    "make_basis",
    "FrontEndConfig",
    "SnrReport",
    "SupportSet",
    "apply_front_end",
    "check_high_snr",
    "proj",
    "sparse_k",
    "support",
    "AttackKind",
    "AttackReport",
    "attack_baseline",
    "attack_semi_white",
    "attack_white",
    "directed_perturbation",
    "measured_distortion",
    "DataError",
    "DatasetConsistencyError",
    "IdxFormatError",
    "PairDataset",
    "RawDataset",
    "load_idx",
    "make_pair_dataset",
    "normalize_pixels",
    "save_idx",
    "EvalResult",
    "LinearModel",
    "TrainConfig",
    "TrainingError",
    "evaluate",
    "load_model",
    "save_model",
    "train",
    "WeightModel",
    "__version__",
]
