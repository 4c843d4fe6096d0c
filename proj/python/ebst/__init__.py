from ._core import (
    DomainTriple,
    EvalResult,
    LabeledSet,
    MlpParams,
    PseudoLabel,
    Rng,
    Thresholds,
    UnlabeledSet,
    default_config,
    energy,
    energy_grad_input,
    evaluate,
    gen_gaussian_blobs,
    gen_two_moons,
    gradcheck,
    joint_energy,
    load_checkpoint,
    log_sum_exp,
    run_experiment,
    smooth_labels,
    softmax,
    solve_pseudo_label,
    thresholds_from_predictions,
)

__all__ = [
    "DomainTriple",
    "EvalResult",
    "LabeledSet",
    "MlpParams",
    "PseudoLabel",
    "Rng",
    "Thresholds",
    "UnlabeledSet",
    "default_config",
    "energy",
    "energy_grad_input",
    "evaluate",
    "gen_gaussian_blobs",
    "gen_two_moons",
    "gradcheck",
    "joint_energy",
    "load_checkpoint",
    "log_sum_exp",
    "run_experiment",
    "smooth_labels",
    "softmax",
    "solve_pseudo_label",
    "thresholds_from_predictions",
]
