"""Adapter for externally published benchmark datasets.

Upstream files are CSV trajectory logs whose column layout is declared in
a JSON manifest, so format changes touch the manifest rather than code.
The manifest lives at ``<data>.manifest.json`` next to the data file (or
is passed explicitly) and contains:

    {
      "columns": {
        "state": ["p", "v", ...],         # ordered state columns
        "action": ["a0", "a1", "a2"],
        "reward": "r",
        "next_state": ["p'", ...] | null, # null: pair consecutive rows
        "trajectory": "traj_id" | null    # null: single trajectory
      },
      "env_spec": { ... },                # optional EnvironmentSpec fields
      "meta": { ... }                     # optional DatasetMeta fields
    }

Missing meta fields are inferred from the filename (tokens matching a
known baseline id and a float are treated as baseline and epsilon).
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from ..core.io import DatasetParseError
from ..core.types import Dataset, DatasetMeta, EnvironmentSpec
from .baselines import BASELINE_IDS


def _meta_from_filename(path: Path) -> dict:
    tokens = re.split(r"[-_.]", path.stem)
    meta: dict = {}
    for tok in tokens:
        if tok in BASELINE_IDS:
            meta["baseline_id"] = tok
    floats = re.findall(r"\d+\.\d+", path.stem)
    if floats:
        eps = float(floats[0])
        if 0.0 <= eps <= 1.0:
            meta["epsilon"] = eps
    return meta


def _default_env_spec(state_dim: int, action_dim: int, overrides: dict) -> EnvironmentSpec:
    spec = {
        "state_dim": state_dim,
        "action_dim": action_dim,
        "action_low": [-1.0] * action_dim,
        "action_high": [1.0] * action_dim,
        "horizon": 100,
        "discount": 0.97,
        "start_state_sampler_id": "imported",
        "env_name": "imported",
    }
    spec.update(overrides)
    return EnvironmentSpec.from_dict(spec)


def import_ib_dataset(path: Path | str, manifest_path: Path | str | None = None) -> Dataset:
    """Read an upstream dataset file under its manifest's column map."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    manifest_path = Path(manifest_path) if manifest_path else path.with_name(path.name + ".manifest.json")
    if not manifest_path.exists():
        raise DatasetParseError(f"missing manifest {manifest_path} for {path}")
    manifest = json.loads(manifest_path.read_text())
    try:
        columns = manifest["columns"]
        state_cols = list(columns["state"])
        action_cols = list(columns["action"])
        reward_col = columns["reward"]
    except KeyError as exc:
        raise DatasetParseError(f"{manifest_path}: manifest missing {exc}") from exc
    next_cols = columns.get("next_state")
    traj_col = columns.get("trajectory")

    with path.open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DatasetParseError(f"{path}: empty file")
        index = {name: i for i, name in enumerate(header)}
        for needed in state_cols + action_cols + [reward_col] + (next_cols or []) + ([traj_col] if traj_col else []):
            if needed not in index:
                raise DatasetParseError(f"{path}: column {needed!r} not in header {header}")

        rows = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DatasetParseError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            try:
                state = [float(row[index[c]]) for c in state_cols]
                action = [float(row[index[c]]) for c in action_cols]
                reward = float(row[index[reward_col]])
                nxt = [float(row[index[c]]) for c in next_cols] if next_cols else None
                traj = row[index[traj_col]] if traj_col else "0"
            except ValueError as exc:
                raise DatasetParseError(f"{path}: row {row_no}: {exc}") from exc
            rows.append((state, action, reward, nxt, traj))

    if not rows:
        raise DatasetParseError(f"{path}: no data rows")

    states, actions, rewards, next_states, starts = [], [], [], [], []
    if next_cols:
        prev_traj = None
        for state, action, reward, nxt, traj in rows:
            if traj != prev_traj:
                starts.append(len(states))
                prev_traj = traj
            states.append(state)
            actions.append(action)
            rewards.append(reward)
            next_states.append(nxt)
    else:
        # Consecutive-row pairing: next state is the following row's state
        # within the same trajectory; each trajectory's last row closes it.
        prev_traj = None
        for i, (state, action, reward, _, traj) in enumerate(rows):
            last_of_traj = i + 1 >= len(rows) or rows[i + 1][4] != traj
            if last_of_traj:
                continue
            if traj != prev_traj:
                starts.append(len(states))
                prev_traj = traj
            states.append(state)
            actions.append(action)
            rewards.append(reward)
            next_states.append(rows[i + 1][0])
        if not states:
            raise DatasetParseError(f"{path}: consecutive-row pairing left no transitions")

    state_dim = len(state_cols)
    action_dim = len(action_cols)
    spec = _default_env_spec(state_dim, action_dim, manifest.get("env_spec", {}))
    if spec.state_dim != state_dim or spec.action_dim != action_dim:
        raise DatasetParseError(
            f"{manifest_path}: env_spec dims ({spec.state_dim}, {spec.action_dim}) do not "
            f"match column map dims ({state_dim}, {action_dim})"
        )

    meta_fields = {
        "env_name": spec.env_name,
        "baseline_id": "unknown",
        "epsilon": 0.0,
        "n_trajectories": len(starts),
        "seed": 0,
    }
    meta_fields.update(_meta_from_filename(path))
    meta_fields.update(manifest.get("meta", {}))
    meta_fields["n_trajectories"] = len(starts)
    meta = DatasetMeta.from_dict(meta_fields)

    try:
        return Dataset.from_arrays(
            np.asarray(states),
            np.asarray(actions),
            np.asarray(rewards),
            np.asarray(next_states),
            meta,
            spec,
            starts,
        )
    except ValueError as exc:
        raise DatasetParseError(f"{path}: {exc}") from exc
