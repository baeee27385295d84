"""Binary label-vector overlap measures and positive-set construction.

The overlap value D(y_i, y_j) plays two roles in the contrastive stage:
thresholded against alpha it decides membership of the positive set
A(i) = {j != i : D >= alpha}, and it weights each surviving pair's term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class PositiveSet:
    """Anchor index plus (member index, overlap weight) pairs."""

    anchor: int
    members: tuple[tuple[int, float], ...]

    def indices(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.members)


def _as_label_array(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise InputError("label vector must be one-dimensional")
    if not np.isin(arr, (0, 1)).all():
        raise InputError("label entries must be 0 or 1")
    return arr.astype(np.int64)


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_label_array(a), _as_label_array(b)
    if a.shape != b.shape:
        raise InputError(f"label length mismatch: {a.size} vs {b.size}")
    return a, b


def jaccard(a, b) -> float:
    """Intersection over union in dot-product form: a.b / (|a|^2 + |b|^2 - a.b).

    Both vectors all-zero is defined as 0 (no division by zero); the data
    pipeline never emits such vectors, but they are tolerated here.
    """
    a, b = _pair(a, b)
    inter = int(a @ b)
    union = int(a @ a) + int(b @ b) - inter
    return inter / union if union else 0.0


def cosine(a, b) -> float:
    """a.b / (|a| |b|), with 0 when either vector is all-zero."""
    a, b = _pair(a, b)
    na, nb = int(a @ a), int(b @ b)
    if na == 0 or nb == 0:
        return 0.0
    return int(a @ b) / float(np.sqrt(float(na) * float(nb)))


MEASURES: dict[str, Callable] = {"jaccard": jaccard, "cosine": cosine}


def resolve_measure(measure) -> Callable:
    """Accept a registry name or a callable (the latter for experiments)."""
    if callable(measure):
        return measure
    if measure in MEASURES:
        return MEASURES[measure]
    raise InputError(f"unknown overlap measure {measure!r}; expected one of {sorted(MEASURES)}")


def overlap_matrix(labels, measure="jaccard") -> np.ndarray:
    """Pairwise overlap D for a stack of label vectors, shape (m, m).

    Registry measures use a vectorized Gram-matrix path; callables fall
    back to a pairwise loop.  Both fill the diagonal with the self value.
    """
    stack = np.asarray(labels)
    if stack.ndim != 2 or stack.shape[0] < 1:
        raise InputError("labels must form a nonempty (m, C) array")
    if not np.isin(stack, (0, 1)).all():
        raise InputError("label entries must be 0 or 1")
    stack = stack.astype(np.int64)
    if callable(measure):
        m = stack.shape[0]
        out = np.zeros((m, m))
        for i in range(m):
            for j in range(m):
                out[i, j] = measure(stack[i], stack[j])
        return out
    fn = resolve_measure(measure)
    gram = (stack @ stack.T).astype(np.float64)
    norms = np.diag(gram).copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        if fn is jaccard:
            denom = norms[:, None] + norms[None, :] - gram
            out = np.where(denom > 0, gram / np.where(denom > 0, denom, 1.0), 0.0)
        else:
            denom = np.sqrt(norms[:, None] * norms[None, :])
            out = np.where(denom > 0, gram / np.where(denom > 0, denom, 1.0), 0.0)
    return out


def positive_sets(labels, alpha: float, measure="jaccard") -> list[PositiveSet]:
    """A(i) for every anchor i over a batch of label vectors.

    Membership uses D(y_i, y_j) >= alpha; each member carries its weight.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must lie in [0, 1], got {alpha!r}")
    stack = np.asarray(labels)
    if stack.ndim != 2 or stack.shape[0] == 0:
        raise InputError("labels must form a nonempty (m, C) array")
    if stack.shape[0] < 2:
        raise InputError("positive sets need a batch of at least 2 views")
    d = overlap_matrix(stack, measure)
    sets = []
    for i in range(stack.shape[0]):
        members = tuple(
            (j, float(d[i, j]))
            for j in range(stack.shape[0])
            if j != i and d[i, j] >= alpha
        )
        sets.append(PositiveSet(anchor=i, members=members))
    return sets


def mean_positive_set_size(sets: Sequence[PositiveSet]) -> float:
    """Average |A(i)| over anchors; the quantity logged by ablation sweeps."""
    if not sets:
        raise InputError("no positive sets supplied")
    return float(np.mean([len(s.members) for s in sets]))
