"""Configuration for the model-free trainers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


@dataclass
class AlgoConfig:
    """Hyperparameters shared by the model-free algorithms plus each
    algorithm's regularizer coefficients."""

    algorithm_id: str = "td3bc"
    seed: int = 0
    batch_size: int = 256
    q_lr: float = 3e-4
    policy_lr: float = 3e-4
    gamma: float | None = None  # None: use the dataset's environment discount
    polyak: float = 0.005
    n_q_members: int = 2
    weighting: str = "min"  # min | mean | convex
    weighting_lam: float = 0.75
    hidden: tuple[int, ...] = (256, 256)
    total_steps: int = 10_000
    eval_interval: int = 1_000

    # BCQ: perturbation magnitude and candidate count
    bcq_phi: float = 0.05
    bcq_n_samples: int = 10

    # BEAR: MMD penalty
    bear_lambda: float = 50.0
    bear_kernel: str = "gaussian"  # gaussian | laplacian
    bear_bandwidth: float = 1.0
    bear_n_policy_samples: int = 20
    bear_n_vae_samples: int = 20

    # BRAC-v: KL penalty in both updates
    brac_alpha: float = 0.3
    brac_n_kl_samples: int = 4
    brac_kl_direction: str = "behavior_policy"  # KL(behavior || policy) | "policy_behavior"

    # CQL: conservative gap coefficient
    cql_alpha: float = 1.0
    cql_n_action_samples: int = 4

    # TD3+BC
    td3bc_lambda: float = 2.5
    td3bc_bc_weight: float = 1.0
    td3bc_adaptive_scale: bool = False
    td3bc_policy_delay: int = 2
    td3bc_smoothing_std: float = 0.2
    td3bc_noise_clip: float = 0.5

    # Behavior-model pretraining (VAE for BCQ/BEAR, Gaussian for BRAC)
    vae_steps: int = 3000
    vae_hidden: tuple[int, ...] = (256, 256)
    vae_latent_dim: int | None = None
    vae_kl_weight: float = 0.5
    vae_lr: float = 1e-3
    behavior_steps: int = 2000
    behavior_lr: float = 1e-3

    def __post_init__(self):
        nonneg = (
            "bcq_phi", "bear_lambda", "bear_bandwidth", "brac_alpha", "cql_alpha",
            "td3bc_lambda", "td3bc_bc_weight", "td3bc_smoothing_std",
        )
        for name in nonneg:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        counts = (
            "bcq_n_samples", "bear_n_policy_samples", "bear_n_vae_samples",
            "brac_n_kl_samples", "cql_n_action_samples", "batch_size",
        )
        for name in counts:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.gamma is not None and not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        self.hidden = tuple(self.hidden)
        self.vae_hidden = tuple(self.vae_hidden)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AlgoConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown AlgoConfig fields: {sorted(unknown)}")
        return cls(**d)
