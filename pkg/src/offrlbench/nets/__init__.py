"""Function approximators: policies, Q-ensembles, behavior VAE, and
dynamics ensembles, plus their supervised training loops."""

from .checkpoint import (
    Checkpoint,
    load_checkpoint,
    load_policy,
    register_policy_loader,
    save_checkpoint,
    save_policy,
)
from .dynamics import (
    DYNAMICS_KINDS,
    DynamicsConfig,
    DynamicsEnsemble,
    DynamicsFitReport,
    ensemble_disagreement,
    fit_dynamics_ensemble,
    max_member_uncertainty,
)
from .gradcheck import GradCheckReport, assert_gradients_match, gradient_check
from .modules import as_tensor, flat_params, mlp, np_noise, seeded_init_, set_flat_params
from .policies import (
    DeterministicPolicyNet,
    GaussianPolicyNet,
    PerturbationNet,
    TorchGaussianPolicy,
    TorchPolicy,
    fit_gaussian_behavior,
    make_deterministic_policy,
    make_gaussian_policy,
)
from .qensemble import QEnsemble, TargetWeighting
from .vae import BehaviorVAE, VAEConfig, fit_behavior_vae, vae_penalty

__all__ = [
    "BehaviorVAE",
    "Checkpoint",
    "DYNAMICS_KINDS",
    "DeterministicPolicyNet",
    "DynamicsConfig",
    "DynamicsEnsemble",
    "DynamicsFitReport",
    "GaussianPolicyNet",
    "GradCheckReport",
    "PerturbationNet",
    "QEnsemble",
    "TargetWeighting",
    "TorchGaussianPolicy",
    "TorchPolicy",
    "VAEConfig",
    "as_tensor",
    "assert_gradients_match",
    "ensemble_disagreement",
    "fit_behavior_vae",
    "fit_dynamics_ensemble",
    "fit_gaussian_behavior",
    "flat_params",
    "gradient_check",
    "load_checkpoint",
    "load_policy",
    "make_deterministic_policy",
    "make_gaussian_policy",
    "max_member_uncertainty",
    "mlp",
    "np_noise",
    "register_policy_loader",
    "save_checkpoint",
    "save_policy",
    "seeded_init_",
    "set_flat_params",
    "vae_penalty",
]
