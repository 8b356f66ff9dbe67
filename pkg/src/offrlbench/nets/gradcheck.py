"""Analytic-vs-numeric gradient verification for small probe networks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import torch
import torch.nn as nn


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: int
    analytic: float
    numeric: float

    def __str__(self):
        return (
            f"max rel error {self.max_rel_error:.3e} at {self.worst_param}[{self.worst_index}] "
            f"(analytic {self.analytic:.6e}, numeric {self.numeric:.6e})"
        )


def gradient_check(module: nn.Module, loss_fn: Callable[[], torch.Tensor],
                   eps: float = 1e-5) -> GradCheckReport:
    """Compare autograd gradients against central finite differences.

    `loss_fn` must recompute the loss from the module's current
    parameters. Intended for small float64 probe networks; float32
    modules will hit difference noise well above 1e-4.

    Relative error is normalized by the largest gradient magnitude so a
    zero-gradient point reports zero error rather than 0/0.
    """
    for p in module.parameters():
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {name: (p.grad.clone() if p.grad is not None else torch.zeros_like(p))
                for name, p in module.named_parameters()}

    numeric: dict[str, torch.Tensor] = {}
    with torch.no_grad():
        for name, p in module.named_parameters():
            g = torch.zeros_like(p)
            flat = p.view(-1)
            gflat = g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                up = float(loss_fn())
                flat[i] = orig - eps
                down = float(loss_fn())
                flat[i] = orig
                gflat[i] = (up - down) / (2.0 * eps)
            numeric[name] = g

    scale = max(
        max((a.abs().max().item() for a in analytic.values()), default=0.0),
        max((n.abs().max().item() for n in numeric.values()), default=0.0),
        1e-8,
    )
    worst = ("", 0, 0.0, 0.0, 0.0)
    for name in analytic:
        diff = (analytic[name] - numeric[name]).abs().view(-1)
        idx = int(diff.argmax())
        err = float(diff[idx]) / scale
        if err >= worst[2]:
            worst = (name, idx, err,
                     float(analytic[name].view(-1)[idx]), float(numeric[name].view(-1)[idx]))
    return GradCheckReport(
        max_rel_error=worst[2], worst_param=worst[0], worst_index=worst[1],
        analytic=worst[3], numeric=worst[4],
    )


def assert_gradients_match(module: nn.Module, loss_fn: Callable[[], torch.Tensor],
                           tol: float = 1e-4, eps: float = 1e-5) -> GradCheckReport:
    report = gradient_check(module, loss_fn, eps=eps)
    if report.max_rel_error >= tol:
        raise AssertionError(f"gradient mismatch: {report}")
    return report
