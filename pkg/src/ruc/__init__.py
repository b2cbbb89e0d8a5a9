"""Robust retraining on noisy pseudo-labels over synthetic Gaussian mixtures.

The package splits a pseudo-labeled dataset into clean and unclean samples
(confidence, neighborhood-vote, or hybrid selection), retrains a pair of
small classifiers semi-supervised (label smoothing, co-refinement, label
guessing, pairwise mixing, confidence-based refurbishing), and evaluates
the result for accuracy, calibration and adversarial robustness.

Numeric hot spots run through a compiled extension when it is available
and an equivalent numpy implementation otherwise; see ``ruc._kernels``.
"""

from ruc._kernels import BACKEND as KERNEL_BACKEND
from ruc.attacks import AttackConfig, attack_batch, bim, fgsm, robustness_curve
from ruc.augment import AugmentConfig, mixup, sharpen, strong_aug, weak_aug
from ruc.errors import (
    ConfigError,
    EvaluationError,
    InputShapeError,
    NumericError,
    ParseError,
    TrainingDiverged,
)
from ruc.metrics import (
    confusion_matrix,
    ece,
    evaluate_classifier,
    hungarian_accuracy,
    selection_quality,
)
from ruc.network import (
    ClassifierNet,
    LossTerm,
    cosine_lr,
    forward,
    forward_batch,
    init_net,
    init_optimizer,
    input_gradient,
    load_net,
    loss_and_gradients,
    loss_value,
    predict,
    reinit_final_layer,
    save_net,
    sgd_step,
)
from ruc.robust_train import (
    TrainConfig,
    co_refine_labeled,
    co_refurbish,
    guess_unlabeled,
    mixmatch,
    run_erm_baseline,
    run_ruc,
    smooth_label,
)
from ruc.selection import (
    Partition,
    SelectionConfig,
    Tau2Schedule,
    load_partition,
    save_partition,
    select,
    select_confidence,
    select_hybrid,
    select_metric,
    tau2_at,
)
from ruc.synthdata import (
    EmbeddingProvider,
    NoiseModel,
    PseudoLabeledDataset,
    apply_noise,
    embed,
    embed_all,
    gen_gaussian_mixture,
    load_dataset,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AugmentConfig",
    "ClassifierNet",
    "ConfigError",
    "EmbeddingProvider",
    "EvaluationError",
    "InputShapeError",
    "KERNEL_BACKEND",
    "LossTerm",
    "NoiseModel",
    "NumericError",
    "ParseError",
    "Partition",
    "PseudoLabeledDataset",
    "SelectionConfig",
    "Tau2Schedule",
    "TrainConfig",
    "TrainingDiverged",
    "apply_noise",
    "attack_batch",
    "bim",
    "co_refine_labeled",
    "co_refurbish",
    "confusion_matrix",
    "cosine_lr",
    "ece",
    "embed",
    "embed_all",
    "evaluate_classifier",
    "fgsm",
    "forward",
    "forward_batch",
    "gen_gaussian_mixture",
    "guess_unlabeled",
    "hungarian_accuracy",
    "init_net",
    "init_optimizer",
    "input_gradient",
    "load_dataset",
    "load_net",
    "load_partition",
    "loss_and_gradients",
    "loss_value",
    "mixmatch",
    "mixup",
    "predict",
    "reinit_final_layer",
    "robustness_curve",
    "run_erm_baseline",
    "run_ruc",
    "save_dataset",
    "save_net",
    "save_partition",
    "select",
    "select_confidence",
    "select_hybrid",
    "select_metric",
    "selection_quality",
    "sgd_step",
    "sharpen",
    "smooth_label",
    "strong_aug",
    "tau2_at",
    "weak_aug",
]
