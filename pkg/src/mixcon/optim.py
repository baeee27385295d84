"""Adam updates, the one-cycle learning-rate schedule, and gradient checking.

The schedule warms up with a half-cosine over the first 30% of steps and
decays with another half-cosine to peak/10^4.  Both segments interpolate
endpoint values directly, so lr(warmup_end) == peak and
lr(total) == peak * final_factor hold exactly, not just approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tape
from .errors import InputError

Params = dict[str, np.ndarray]


@dataclass
class AdamState:
    """First/second moment buffers plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: Params, keys: tuple[str, ...] | None = None) -> AdamState:
    """Zeroed moments for ``keys`` (default: every parameter)."""
    names = list(params) if keys is None else list(keys)
    return AdamState(
        m={k: np.zeros_like(params[k]) for k in names},
        v={k: np.zeros_like(params[k]) for k in names},
    )


def adam_step(state: AdamState, params: Params, gradients: dict[str, np.ndarray], lr_now: float) -> None:
    """One bias-corrected Adam update, in place.

    Only parameters named in ``gradients`` move; that is how frozen
    stages keep the rest untouched.  Iteration follows the state's key
    order, so update order (and therefore bytes) is reproducible.
    """
    if not lr_now > 0.0:
        raise InputError(f"learning rate must be positive, got {lr_now!r}")
    for name in gradients:
        if name not in state.m:
            raise InputError(f"gradient for unknown parameter {name!r}")
        if gradients[name].shape != params[name].shape:
            raise InputError(f"gradient shape mismatch for {name!r}")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name in state.m:
        g = gradients.get(name)
        if g is None:
            g = np.zeros_like(params[name])
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = state.m[name] / (1.0 - b1**t)
        v_hat = state.v[name] / (1.0 - b2**t)
        params[name] -= lr_now * m_hat / (np.sqrt(v_hat) + state.eps)


def one_cycle_lr(
    step: int,
    total_steps: int,
    peak_lr: float,
    *,
    warmup_frac: float = 0.3,
    final_factor: float = 1e-4,
    start_factor: float = 0.04,
) -> float:
    """Learning rate at ``step`` of a cosine warmup / cosine decay cycle."""
    if total_steps < 1:
        raise InputError("total_steps must be >= 1")
    if not 0 <= step <= total_steps:
        raise InputError(f"step {step} outside [0, {total_steps}]")
    if not peak_lr > 0.0:
        raise InputError("peak_lr must be positive")
    warmup_steps = int(round(warmup_frac * total_steps))
    start_lr = peak_lr * start_factor
    final_lr = peak_lr * final_factor
    if step <= warmup_steps:
        if warmup_steps == 0:
            return peak_lr
        w = 0.5 * (1.0 - math.cos(math.pi * step / warmup_steps))
        return start_lr * (1.0 - w) + peak_lr * w
    u = (step - warmup_steps) / (total_steps - warmup_steps)
    w = 0.5 * (1.0 + math.cos(math.pi * u))
    return final_lr * (1.0 - w) + peak_lr * w


def finite_diff_check(params: Params, loss_fn, step: float = 1e-5) -> float:
    """Worst-case relative error of tape gradients vs central differences.

    ``loss_fn`` maps a dict of Tensors (same keys as ``params``) to a
    scalar Tensor and must be pure.  Every scalar parameter is perturbed
    in both directions; the relative error uses denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    if not step > 0.0:
        raise InputError("step must be positive")
    leaves = {k: tape.leaf(v) for k, v in params.items()}
    analytic_grads = dict(
        zip(leaves, tape.grads_of(loss_fn(leaves), list(leaves.values())))
    )

    def value_at(values: Params) -> float:
        out = loss_fn({k: tape.constant(v) for k, v in values.items()})
        return float(out.value)

    worst = 0.0
    for name, base in params.items():
        flat = np.asarray(base, dtype=np.float64).ravel()
        for idx in range(flat.size):
            perturbed = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
            perturbed[name].ravel()[idx] = flat[idx] + step
            hi = value_at(perturbed)
            perturbed[name].ravel()[idx] = flat[idx] - step
            lo = value_at(perturbed)
            numeric = (hi - lo) / (2.0 * step)
            analytic = float(analytic_grads[name].ravel()[idx])
            denom = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst
