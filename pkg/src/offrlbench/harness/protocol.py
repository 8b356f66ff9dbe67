"""The worst-case scoring protocol.

For each run, keep the final ceil(0.1 * n) evaluation records; pool the
kept values across runs (normally one per seed); report the 10th
percentile (linear interpolation between closest ranks) and the standard
error of the pooled values (sample std / sqrt(n), zero for one value).
"""

from __future__ import annotations

import math

import numpy as np

from ..core.types import RunHistory

TAIL_FRACTION = 0.1
SCORE_PERCENTILE = 10.0


def history_tail(history: RunHistory, tail_fraction: float = TAIL_FRACTION) -> np.ndarray:
    """Final ceil(tail_fraction * n) mean returns of one run."""
    if len(history) == 0:
        raise ValueError(f"run {history.run_id!r} has no evaluation records")
    keep = math.ceil(tail_fraction * len(history))
    return history.returns()[-keep:]


def protocol_score(
    histories: list[RunHistory],
    tail_fraction: float = TAIL_FRACTION,
    percentile: float = SCORE_PERCENTILE,
) -> tuple[float, float]:
    """(tenth-percentile score, standard error) over pooled run tails."""
    if not histories:
        raise ValueError("need at least one run history")
    algos = {h.algorithm_id for h in histories}
    datasets = {h.dataset_id for h in histories}
    if len(algos) > 1 or len(datasets) > 1:
        raise ValueError(f"histories mix algorithms {algos} or datasets {datasets}")
    pool = np.concatenate([history_tail(h, tail_fraction) for h in histories])
    if pool.size == 0:
        raise ValueError("pooled evaluation tail is empty")
    score = float(np.percentile(pool, percentile, method="linear"))
    se = 0.0 if pool.size < 2 else float(pool.std(ddof=1) / math.sqrt(pool.size))
    return score, se
