"""Training losses: mixture NLL, overlap-weighted contrastive, their
weighted sum, and the asymmetric classification loss.

Each loss exists in two layers.  The ``*_t`` functions operate on
:class:`~mixcon.tape.Tensor` batches of stacked mixture parameters and
return a scalar Tensor, so the model's forward pass can chain straight
into them.  The plain-named wrappers accept validated domain objects
(:class:`~mixcon.gmm.IsoGaussianMixture` lists, probability arrays),
run one backward pass, and hand back ``(value, gradients)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tape
from .errors import InputError
from .gmm import IsoGaussianMixture
from .overlap import MEASURES, overlap_matrix
from .tape import Tensor

SIM_BACKENDS = ("correlation",)


@dataclass(frozen=True)
class ContrastiveLossConfig:
    """Contrastive-stage hyperparameters.

    tau: softmax temperature; alpha: overlap threshold for positive sets;
    lam: weight of the contrastive term in the total loss; measure: label
    overlap backend; sim: mixture similarity backend (only the closed-form
    correlation coefficient is differentiable, so only it is accepted).
    """

    tau: float = 0.2
    alpha: float = 0.6
    lam: float = 0.3
    measure: str = "jaccard"
    sim: str = "correlation"

    def __post_init__(self):
        if not self.tau > 0.0:
            raise InputError(f"tau must be positive, got {self.tau!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.lam < 0.0:
            raise InputError(f"lambda must be >= 0, got {self.lam!r}")
        if not callable(self.measure) and self.measure not in MEASURES:
            raise InputError(f"unknown overlap measure {self.measure!r}")
        if self.sim not in SIM_BACKENDS:
            raise InputError(
                f"unsupported similarity backend {self.sim!r}; "
                f"Monte-Carlo similarities are diagnostics, not trainable"
            )


@dataclass(frozen=True)
class AslConfig:
    """Asymmetric-loss hyperparameters (published defaults)."""

    gamma_pos: float = 0.0
    gamma_neg: float = 4.0
    margin: float = 0.05

    def __post_init__(self):
        if self.gamma_pos < 0.0 or self.gamma_neg < 0.0:
            raise InputError("focusing exponents must be >= 0")
        if not 0.0 <= self.margin < 1.0:
            raise InputError(f"margin must lie in [0, 1), got {self.margin!r}")


# -- tensor-level losses ----------------------------------------------------


def _check_param_block(weights: Tensor, means: Tensor, variances: Tensor) -> tuple[int, int]:
    shape = weights.value.shape
    if len(shape) != 2 or means.value.shape != shape or variances.value.shape != shape:
        raise InputError("stacked mixture parameters must share one (B, C) shape")
    if np.any(variances.value <= 0.0):
        raise InputError("variances must be positive")
    return shape


def nll_loss_t(weights: Tensor, means: Tensor, variances: Tensor, targets: Tensor) -> Tensor:
    """Sum over the batch of -log p(z_i | mixture_i).

    Weights must be strictly positive: the log-space path differentiates
    log(pi_k), whose gradient is undefined at 0.  Softmax outputs always
    satisfy this.
    """
    b, c = _check_param_block(weights, means, variances)
    if targets.value.ndim != 2 or targets.value.shape[0] != b:
        raise InputError("targets must be a (B, n) block matching the batch")
    if np.any(weights.value <= 0.0):
        raise InputError("nll_loss requires strictly positive mixture weights")
    n = targets.value.shape[1]
    diff = tape.reshape(targets, (b, 1, n)) - tape.reshape(means, (b, c, 1))
    sq = tape.tsum(diff * diff, axis=2)
    log_norm = tape.log(variances * (2.0 * np.pi)) * (0.5 * n)
    component = -log_norm - sq / (variances * 2.0)
    log_post = tape.logsumexp(tape.log(weights) + component, axis=1)
    return -tape.tsum(log_post)


def _pairwise_cross(w_a, m_a, v_a, w_b, m_b, v_b, dim, shape_a, shape_b, reduce_axes):
    """Closed-form sum_k sum_l w w' integral(N N') with tensors, any broadcast layout."""
    va = tape.reshape(v_a, shape_a)
    vb = tape.reshape(v_b, shape_b)
    total_var = va + vb
    delta = tape.reshape(m_a, shape_a) - tape.reshape(m_b, shape_b)
    pair = tape.pow_const(total_var * (2.0 * np.pi), -0.5 * dim) * tape.exp(
        (delta * delta) * (-0.5 * dim) / total_var
    )
    w_outer = tape.reshape(w_a, shape_a) * tape.reshape(w_b, shape_b)
    return tape.tsum(w_outer * pair, axis=reduce_axes)


def similarity_matrix_t(
    weights: Tensor, means: Tensor, variances: Tensor, dim: int
) -> Tensor:
    """(B, B) correlation-coefficient similarity between all mixture pairs.

    Row i, column j holds cross(i,j) / sqrt(self(i) * self(j)).  The
    diagonal is computed like any other entry and is masked by callers.
    """
    b, c = _check_param_block(weights, means, variances)
    cross = _pairwise_cross(
        weights, means, variances, weights, means, variances,
        dim, (b, 1, c, 1), (1, b, 1, c), (2, 3),
    )
    self_overlap = _pairwise_cross(
        weights, means, variances, weights, means, variances,
        dim, (b, c, 1), (b, 1, c), (1, 2),
    )
    denom = tape.sqrt(tape.reshape(self_overlap, (b, 1)) * tape.reshape(self_overlap, (1, b)))
    return cross / denom


def pcl_loss_t(
    weights: Tensor,
    means: Tensor,
    variances: Tensor,
    labels,
    dim: int,
    cfg: ContrastiveLossConfig,
) -> Tensor:
    """Overlap-weighted contrastive loss over a 2N-view batch.

    For each anchor i with positive set A(i) (overlap >= alpha), adds
    -(1/|A(i)|) * sum_{j in A(i)} D_ij * log softmax over l != i of
    Sim_il / tau.  Anchors with empty positive sets contribute zero.
    """
    b, _ = _check_param_block(weights, means, variances)
    if b < 2:
        raise InputError("contrastive batches need at least 2 views")
    label_stack = np.asarray(labels)
    if label_stack.ndim != 2 or label_stack.shape[0] != b:
        raise InputError("labels must be a (2N, C) stack matching the batch")
    d = overlap_matrix(label_stack, cfg.measure)
    off_diag = ~np.eye(b, dtype=bool)
    positive = off_diag & (d >= cfg.alpha)
    counts = positive.sum(axis=1)
    coef = np.zeros((b, b))
    rows = counts > 0
    coef[rows] = -(d[rows] * positive[rows]) / counts[rows, None]

    logits = similarity_matrix_t(weights, means, variances, dim) / cfg.tau
    masked = tape.where(off_diag, logits, tape.constant(-np.inf))
    log_denom = tape.logsumexp(masked, axis=1, keepdims=True)
    log_softmax = logits - log_denom
    return tape.tsum(tape.constant(coef) * log_softmax)


def total_loss_t(nll: Tensor, pcl: Tensor, lam: float) -> Tensor:
    if lam < 0.0:
        raise InputError(f"lambda must be >= 0, got {lam!r}")
    return nll + pcl * lam


def asl_loss_t(probabilities: Tensor, labels, cfg: AslConfig) -> Tensor:
    """Asymmetric binary loss summed over batch and classes.

    Positive terms -(1-p)^g+ log p; negative terms -(p_m)^g- log(1 - p_m)
    with p_m = max(p - margin, 0).  A probability of exactly 0 on a
    positive (or 1 with margin 0 on a negative) makes the loss infinite,
    which backward() then reports as a numeric error.
    """
    probs = probabilities
    if probs.value.ndim == 1:
        probs = tape.reshape(probs, (1, probs.value.shape[0]))
    y = np.asarray(labels)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape != probs.value.shape:
        raise InputError("labels must match the probability block shape")
    if not np.isin(y, (0, 1)).all():
        raise InputError("label entries must be 0 or 1")
    if np.any(probs.value < 0.0) or np.any(probs.value > 1.0):
        raise InputError("probabilities must lie in [0, 1]")
    pos_mask = y == 1
    # Masked-out branches are pinned to safe constants so the dead side
    # never produces log(0) that would poison the live side via 0 * inf.
    p_pos = tape.where(pos_mask, probs, tape.constant(np.full(y.shape, 0.5)))
    pos_term = tape.pow_const(1.0 - p_pos, cfg.gamma_pos) * tape.log(p_pos)
    shifted = tape.relu(probs - cfg.margin)
    p_neg = tape.where(~pos_mask, shifted, tape.constant(np.zeros(y.shape)))
    neg_term = tape.pow_const(p_neg, cfg.gamma_neg) * tape.log(1.0 - p_neg)
    gated = tape.where(pos_mask, pos_term, neg_term)
    return -tape.tsum(gated)


# -- (value, gradients) wrappers over domain objects -------------------------


@dataclass(frozen=True)
class MixtureGradients:
    """d(loss)/d(parameter) for a stacked batch of mixtures."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    targets: np.ndarray | None = None


def stack_mixtures(mixtures: Sequence[IsoGaussianMixture]) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    if len(mixtures) == 0:
        raise InputError("empty mixture batch")
    dims = {g.dim for g in mixtures}
    comps = {g.num_components for g in mixtures}
    if len(dims) != 1 or len(comps) != 1:
        raise InputError("batch mixtures must share dim and component count")
    return (
        np.stack([g.weights for g in mixtures]),
        np.stack([g.means for g in mixtures]),
        np.stack([g.variances for g in mixtures]),
        dims.pop(),
    )


def nll_loss(
    mixtures: Sequence[IsoGaussianMixture], targets
) -> tuple[float, MixtureGradients]:
    """Batch NLL and its gradients w.r.t. every mixture parameter and target."""
    w, m, v, dim = stack_mixtures(mixtures)
    z = np.asarray(targets, dtype=np.float64)
    if z.ndim == 1:
        z = z[None, :]
    if z.shape != (len(mixtures), dim):
        raise InputError(f"targets must have shape ({len(mixtures)}, {dim})")
    tw, tm, tv, tz = tape.leaf(w), tape.leaf(m), tape.leaf(v), tape.leaf(z)
    loss = nll_loss_t(tw, tm, tv, tz)
    gw, gm, gv, gz = tape.grads_of(loss, [tw, tm, tv, tz])
    return float(loss.value), MixtureGradients(gw, gm, gv, gz)


def pcl_loss(
    mixtures: Sequence[IsoGaussianMixture], labels, cfg: ContrastiveLossConfig
) -> tuple[float, MixtureGradients]:
    """Contrastive loss and gradients w.r.t. every mixture parameter."""
    w, m, v, dim = stack_mixtures(mixtures)
    tw, tm, tv = tape.leaf(w), tape.leaf(m), tape.leaf(v)
    loss = pcl_loss_t(tw, tm, tv, labels, dim, cfg)
    gw, gm, gv = tape.grads_of(loss, [tw, tm, tv])
    return float(loss.value), MixtureGradients(gw, gm, gv)


def total_loss(nll: float, pcl: float, lam: float) -> float:
    """Combined objective nll + lam * pcl."""
    if lam < 0.0:
        raise InputError(f"lambda must be >= 0, got {lam!r}")
    return float(nll) + lam * float(pcl)


def asl_loss(probabilities, labels, cfg: AslConfig = AslConfig()) -> tuple[float, np.ndarray]:
    """Asymmetric loss and gradient w.r.t. the probabilities."""
    probs = np.asarray(probabilities, dtype=np.float64)
    t = tape.leaf(probs)
    loss = asl_loss_t(t, labels, cfg)
    (grad,) = tape.grads_of(loss, [t])
    return float(loss.value), grad
