"""Normalization statistics over offline datasets."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .types import Dataset

# Floor applied to every standard deviation so constant dimensions never
# divide by zero downstream.
SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class DeltaStats:
    """Elementwise mean/std of state deltas, states, and actions.

    Standard deviations use the population convention (ddof=0) and are
    floored at SIGMA_FLOOR.
    """

    mu_delta: np.ndarray
    sigma_delta: np.ndarray
    mu_state: np.ndarray
    sigma_state: np.ndarray
    mu_action: np.ndarray
    sigma_action: np.ndarray


def _floored_std(values: np.ndarray, what: str) -> np.ndarray:
    sigma = values.std(axis=0, ddof=0)
    flat = sigma < SIGMA_FLOOR
    if np.any(flat):
        warnings.warn(
            f"{what}: {int(flat.sum())} constant dimension(s), std floored at {SIGMA_FLOOR}",
            stacklevel=3,
        )
        sigma = np.maximum(sigma, SIGMA_FLOOR)
    return sigma


def dataset_delta_stats(dataset: Dataset) -> DeltaStats:
    """Mean and standard deviation of (s' - s), s, and a over a dataset."""
    if len(dataset) == 0:
        raise ValueError("dataset must be nonempty")
    deltas = dataset.next_states - dataset.states
    return DeltaStats(
        mu_delta=deltas.mean(axis=0),
        sigma_delta=_floored_std(deltas, "state deltas"),
        mu_state=dataset.states.mean(axis=0),
        sigma_state=_floored_std(dataset.states, "states"),
        mu_action=dataset.actions.mean(axis=0),
        sigma_action=_floored_std(dataset.actions, "actions"),
    )
