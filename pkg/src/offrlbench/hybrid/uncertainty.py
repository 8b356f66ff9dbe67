"""Unknown-state gating and uncertainty-penalized rewards."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..core.types import Dataset
from ..nets.dynamics import DynamicsEnsemble, ensemble_disagreement, max_member_uncertainty
from ..nets.modules import as_tensor


@dataclass(frozen=True)
class USADGate:
    """Flags state-action pairs whose ensemble disagreement exceeds a
    calibrated threshold as unknown territory."""

    ensemble: DynamicsEnsemble
    threshold: float
    percentile: float

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")


def usad(gate: USADGate, states, actions):
    """True where (s, a) is known: disagreement strictly below the
    threshold. Scalar inputs give a bool, batches a bool array."""
    d = ensemble_disagreement(gate.ensemble, states, actions)
    if isinstance(d, torch.Tensor):
        return d < gate.threshold
    if np.isscalar(d):
        return bool(d < gate.threshold)
    return d < gate.threshold


def calibrate_usad(ens: DynamicsEnsemble, dataset: Dataset, percentile: float) -> USADGate:
    """Set the threshold at the given percentile of disagreement over all
    dataset pairs (linear interpolation), nudged up one ulp so pairs
    sitting exactly at the percentile count as known."""
    if not (0.0 <= percentile <= 100.0):
        raise ValueError("percentile must be in [0, 100]")
    d = ensemble_disagreement(ens, dataset.states, dataset.actions)
    raw = float(np.percentile(d, percentile, method="linear"))
    return USADGate(ensemble=ens, threshold=float(np.nextafter(raw, np.inf)), percentile=percentile)


def mopo_penalized_reward(ens: DynamicsEnsemble, states, actions, lam: float):
    """Ensemble-mean predicted reward minus lam times the largest member
    sigma norm. Requires a Gaussian ensemble."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if isinstance(states, torch.Tensor):
        return ens.mean_reward(states, actions) - lam * max_member_uncertainty(ens, states, actions)
    single = np.asarray(states).ndim == 1
    s = np.atleast_2d(np.asarray(states, dtype=np.float64))
    a = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    with torch.no_grad():
        out = mopo_penalized_reward(ens, as_tensor(s, ens), as_tensor(a, ens), lam).numpy()
    return float(out[0]) if single else out.astype(np.float64)
