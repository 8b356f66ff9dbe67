"""Maximum mean discrepancy between two action sample sets.

Biased (V-statistic) squared-MMD estimate: the kernel double sums keep
the diagonal, so the result is nonnegative up to rounding and exactly
zero on identical sets. Two kernels:

    gaussian:  k(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2))
    laplacian: k(x, y) = exp(-||x - y||_1 / bandwidth)
"""

from __future__ import annotations

import numpy as np
import torch

KERNELS = ("gaussian", "laplacian")


def _check_kernel(kernel: str, bandwidth: float):
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}, got {kernel!r}")
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")


def mmd(samples_p, samples_q, kernel: str = "gaussian", bandwidth: float = 1.0) -> float:
    """Squared-MMD estimate between two sample sets of shape (n, d).

    Symmetric in its arguments and >= -1e-9; identical sets give zero.
    """
    _check_kernel(kernel, bandwidth)
    p = np.atleast_2d(np.asarray(samples_p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(samples_q, dtype=np.float64))
    if p.size == 0 or q.size == 0:
        raise ValueError("sample sets must be nonempty")

    def gram(a, b):
        if kernel == "gaussian":
            d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
            return np.exp(-d2 / (2.0 * bandwidth**2))
        d1 = np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
        return np.exp(-d1 / bandwidth)

    return float(gram(p, p).mean() + gram(q, q).mean() - 2.0 * gram(p, q).mean())


def mmd_batched(p: torch.Tensor, q: torch.Tensor, kernel: str = "gaussian",
                bandwidth: float = 1.0) -> torch.Tensor:
    """Per-state squared MMD for batched sample sets.

    p: (batch, n, d), q: (batch, m, d) -> (batch,). Differentiable, used
    inside policy losses.
    """
    _check_kernel(kernel, bandwidth)

    def gram(a, b):
        diff = a.unsqueeze(2) - b.unsqueeze(1)  # (batch, n, m, d)
        if kernel == "gaussian":
            return torch.exp(-(diff**2).sum(dim=3) / (2.0 * bandwidth**2))
        return torch.exp(-diff.abs().sum(dim=3) / bandwidth)

    return (
        gram(p, p).mean(dim=(1, 2))
        + gram(q, q).mean(dim=(1, 2))
        - 2.0 * gram(p, q).mean(dim=(1, 2))
    )
