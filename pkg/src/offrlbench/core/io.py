"""Dataset and run-history persistence.

Dataset format: one CSV with header
``s_0..s_{d-1},a_0..a_{k-1},r,sp_0..sp_{d-1},traj_id`` plus a JSON
sidecar ``<name>.meta.json`` carrying the dataset metadata and the
environment spec. Floats are written with 17 significant digits so
double-precision values round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .types import Dataset, DatasetMeta, EnvironmentSpec, RunHistory


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dataset_header(spec: EnvironmentSpec) -> list[str]:
    return (
        [f"s_{i}" for i in range(spec.state_dim)]
        + [f"a_{i}" for i in range(spec.action_dim)]
        + ["r"]
        + [f"sp_{i}" for i in range(spec.state_dim)]
        + ["traj_id"]
    )


def sidecar_path(csv_path: Path | str) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def save_dataset(dataset: Dataset, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    traj_ids = dataset.trajectory_ids()
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(dataset_header(dataset.spec))
        for i in range(len(dataset)):
            row = (
                [_fmt(x) for x in dataset.states[i]]
                + [_fmt(x) for x in dataset.actions[i]]
                + [_fmt(dataset.rewards[i])]
                + [_fmt(x) for x in dataset.next_states[i]]
                + [str(int(traj_ids[i]))]
            )
            writer.writerow(row)
    sidecar = sidecar_path(path)
    sidecar.write_text(
        json.dumps(
            {"meta": dataset.meta.to_dict(), "env_spec": dataset.spec.to_dict()},
            indent=2,
        )
        + "\n"
    )
    return path


class DatasetParseError(ValueError):
    """Malformed dataset file; message names the offending row."""


def load_dataset(path: Path | str) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    sidecar = sidecar_path(path)
    if not sidecar.exists():
        raise DatasetParseError(f"missing sidecar {sidecar}")
    side = json.loads(sidecar.read_text())
    meta = DatasetMeta.from_dict(side["meta"])
    spec = EnvironmentSpec.from_dict(side["env_spec"])
    expected = dataset_header(spec)

    d, k = spec.state_dim, spec.action_dim
    states, actions, rewards, next_states, traj_ids = [], [], [], [], []
    with path.open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != expected:
            raise DatasetParseError(f"{path}: header mismatch, expected {expected}, got {header}")
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DatasetParseError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {len(expected)}"
                )
            try:
                values = [float(x) for x in row[:-1]]
                traj = int(row[-1])
            except ValueError as exc:
                raise DatasetParseError(f"{path}: row {row_no}: {exc}") from exc
            states.append(values[:d])
            actions.append(values[d : d + k])
            rewards.append(values[d + k])
            next_states.append(values[d + k + 1 : d + k + 1 + d])
            traj_ids.append(traj)

    if not states:
        raise DatasetParseError(f"{path}: no transitions")
    traj_arr = np.asarray(traj_ids)
    starts = [0] + [i for i in range(1, len(traj_arr)) if traj_arr[i] != traj_arr[i - 1]]
    return Dataset.from_arrays(
        np.asarray(states),
        np.asarray(actions),
        np.asarray(rewards),
        np.asarray(next_states),
        meta,
        spec,
        starts,
    )


def save_history(history: RunHistory, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "mean_return"])
        for rec in history.records:
            writer.writerow([str(rec.step), _fmt(rec.mean_return)])
    return path


def load_history(
    path: Path | str,
    run_id: str = "",
    algorithm_id: str = "",
    dataset_id: str = "",
    seed: int = 0,
) -> RunHistory:
    path = Path(path)
    history = RunHistory(run_id=run_id or path.stem, algorithm_id=algorithm_id, dataset_id=dataset_id, seed=seed)
    with path.open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["step", "mean_return"]:
            raise DatasetParseError(f"{path}: bad history header {header}")
        for row in reader:
            history.append(int(row[0]), float(row[1]))
    return history
