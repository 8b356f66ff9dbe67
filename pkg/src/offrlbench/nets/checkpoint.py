"""Self-describing checkpoint files.

A checkpoint is an .npz container holding a JSON header (format tag,
version, kind, architecture hyperparameters) plus named float arrays.
Any policy handle exposing `to_checkpoint()` can be persisted; loading
dispatches on the header's kind through a registry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "offrlbench-checkpoint"
CHECKPOINT_VERSION = 1

_POLICY_LOADERS: dict[str, callable] = {}


def register_policy_loader(kind: str, loader) -> None:
    _POLICY_LOADERS[kind] = loader


@dataclass
class Checkpoint:
    kind: str
    architecture: dict
    arrays: dict[str, np.ndarray]


def save_checkpoint(path: Path | str, kind: str, architecture: dict,
                    arrays: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "architecture": architecture,
    }
    with path.open("wb") as f:
        np.savez(f, __header__=np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8),
                 **{k: np.asarray(v) for k, v in arrays.items()})
    return path


def load_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    with np.load(path) as data:
        if "__header__" not in data:
            raise ValueError(f"{path}: not a checkpoint file (missing header)")
        header = json.loads(bytes(data["__header__"].tobytes()).decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: unknown checkpoint format {header.get('format')!r}")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        arrays = {k: data[k].copy() for k in data.files if k != "__header__"}
    return Checkpoint(kind=header["kind"], architecture=header["architecture"], arrays=arrays)


def save_policy(path: Path | str, policy) -> Path:
    if not hasattr(policy, "to_checkpoint"):
        raise TypeError(f"{type(policy).__name__} does not support checkpointing")
    kind, architecture, arrays = policy.to_checkpoint()
    return save_checkpoint(path, kind, architecture, arrays)


def load_policy(path: Path | str):
    ckpt = load_checkpoint(path)
    _ensure_builtin_loaders()
    loader = _POLICY_LOADERS.get(ckpt.kind)
    if loader is None:
        raise ValueError(f"no loader registered for checkpoint kind {ckpt.kind!r}")
    return loader(ckpt.architecture, ckpt.arrays)


def _ensure_builtin_loaders() -> None:
    if "deterministic_mlp" not in _POLICY_LOADERS:
        from .policies import TorchGaussianPolicy, TorchPolicy

        register_policy_loader("deterministic_mlp", TorchPolicy.from_checkpoint)
        register_policy_loader("gaussian_mlp", TorchGaussianPolicy.from_checkpoint)
    if "bcq" not in _POLICY_LOADERS:
        # Composite policies register themselves on import.
        from .. import modelfree  # noqa: F401
