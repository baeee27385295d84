"""Reverse-mode automatic differentiation over float64 numpy arrays.

A :class:`Tensor` wraps a value array and remembers the operation that
produced it.  Calling :func:`backward` on a scalar result walks the tape
in reverse topological order and accumulates gradients into every leaf
reachable from it.  Graphs are rebuilt per step; nothing is retained
between calls.

Only the operations needed by the losses and the model are provided.
All arithmetic follows numpy broadcasting; gradients are summed back
over broadcast axes so leaf gradients always match leaf shapes.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import InputError, NumericError

Array = np.ndarray

_BackwardFn = Callable[[Array], tuple]


class Tensor:
    """Node in the differentiation graph."""

    __slots__ = ("value", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(
        self,
        value,
        requires_grad: bool = False,
        *,
        op: str = "leaf",
        parents: tuple["Tensor", ...] = (),
        backward_fn: _BackwardFn | None = None,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents = parents
        self._backward = backward_fn

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(op={self.op!r}, shape={self.value.shape})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return pow_const(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(value) -> Tensor:
    """Wrap a value with gradient tracking disabled."""
    return Tensor(value, requires_grad=False, op="const")


def leaf(value) -> Tensor:
    """Wrap a value as a trainable leaf."""
    return Tensor(value, requires_grad=True, op="leaf")


def detach(t: Tensor) -> Tensor:
    """Copy of ``t``'s value with the tape cut."""
    return Tensor(t.value, requires_grad=False, op="detach")


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(x)


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` over the axes numpy broadcast to reach ``grad.shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _node(op, value, parents, backward_fn) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(
        value,
        requires_grad=needs,
        op=op,
        parents=parents if needs else (),
        backward_fn=backward_fn if needs else None,
    )


# -- elementwise binary ops ---------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.value + b.value

    def bw(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return _node("add", out, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.value - b.value

    def bw(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)

    return _node("sub", out, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.value * b.value

    def bw(g):
        return (
            _unbroadcast(g * b.value, a.value.shape),
            _unbroadcast(g * a.value, b.value.shape),
        )

    return _node("mul", out, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.value / b.value

    def bw(g):
        return (
            _unbroadcast(g / b.value, a.value.shape),
            _unbroadcast(-g * a.value / (b.value * b.value), b.value.shape),
        )

    return _node("div", out, (a, b), bw)


# -- elementwise unary ops ----------------------------------------------


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _node("neg", -a.value, (a,), lambda g: (-g,))


def pow_const(a, exponent: float) -> Tensor:
    """``a`` raised to a fixed scalar exponent.

    ``exponent == 0`` is treated as the constant 1 with zero gradient, so
    focusing factors switched off in a config do not inject 0*inf terms.
    """
    a = _as_tensor(a)
    exponent = float(exponent)
    if exponent == 0.0:
        out = np.ones_like(a.value)
        return _node("pow", out, (a,), lambda g: (np.zeros_like(a.value),))
    out = np.power(a.value, exponent)

    def bw(g):
        return (g * exponent * np.power(a.value, exponent - 1.0),)

    return _node("pow", out, (a,), bw)


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = np.exp(a.value)
    return _node("exp", out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    return _node("log", np.log(a.value), (a,), lambda g: (g / a.value,))


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    out = np.sqrt(a.value)
    return _node("sqrt", out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.value)
    return _node("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    # Split by sign so neither branch exponentiates a large positive value.
    x = a.value
    t = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    return _node("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.value > 0
    return _node("relu", np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def elu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.value > 0
    out = np.where(mask, a.value, np.expm1(np.minimum(a.value, 0.0)))

    def bw(g):
        return (g * np.where(mask, 1.0, np.exp(np.minimum(a.value, 0.0))),)

    return _node("elu", out, (a,), bw)


def where(condition, a, b) -> Tensor:
    """Elementwise select with a constant boolean mask.

    The mask is data, not a differentiable input; gradients flow only
    into the branch each element selected.
    """
    cond = np.asarray(condition, dtype=bool)
    a, b = _as_tensor(a), _as_tensor(b)
    out = np.where(cond, a.value, b.value)

    def bw(g):
        return (
            _unbroadcast(np.where(cond, g, 0.0), a.value.shape),
            _unbroadcast(np.where(cond, 0.0, g), b.value.shape),
        )

    return _node("where", out, (a, b), bw)


# -- shape ops -----------------------------------------------------------


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = a.value.reshape(shape)
    return _node("reshape", out, (a,), lambda g: (g.reshape(a.value.shape),))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    """Sum over an axis, a tuple of axes, or everything (axis=None)."""
    a = _as_tensor(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is None:
            return (np.broadcast_to(g, a.value.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape).copy(),)

    return _node("sum", out, (a,), bw)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise InputError("matmul expects two rank-2 arrays")
    out = a.value @ b.value

    def bw(g):
        return g @ b.value.T, a.value.T @ g

    return _node("matmul", out, (a, b), bw)


# -- composed numerically stable reductions ------------------------------


def logsumexp(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    """log(sum(exp(a))) along ``axis`` with a detached max shift."""
    shift = np.max(a.value, axis=axis, keepdims=True)
    summed = tsum(exp(a - constant(shift)), axis=axis, keepdims=True)
    out = log(summed) + constant(shift)
    if not keepdims:
        out = reshape(out, np.squeeze(out.value, axis=axis).shape)
    return out


def softmax(a: Tensor, axis: int) -> Tensor:
    """Softmax along ``axis``; gradient follows from the composition."""
    shift = np.max(a.value, axis=axis, keepdims=True)
    e = exp(a - constant(shift))
    return e / tsum(e, axis=axis, keepdims=True)


# -- reverse pass ---------------------------------------------------------


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable tensor.

    Gradient buffers of the reachable graph are reset first, so each call
    reports exactly one backward pass.  Raises :class:`NumericError` if the
    loss or any intermediate gradient is non-finite, naming the operation.
    """
    if loss.value.size != 1:
        raise InputError("backward requires a scalar loss")
    if not np.isfinite(loss.value):
        raise NumericError("loss is non-finite")
    order = _toposort(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        # Non-finite local gradients are raised as errors just below, so
        # numpy's own warnings for the producing division are redundant.
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            contributions = node._backward(node.grad)
        for parent, contribution in zip(node._parents, contributions):
            if not parent.requires_grad:
                continue
            if not np.all(np.isfinite(contribution)):
                raise NumericError(f"non-finite gradient produced by op '{node.op}'")
            if parent.grad is None:
                parent.grad = np.array(contribution, dtype=np.float64)
            else:
                parent.grad = parent.grad + contribution


def grads_of(loss: Tensor, leaves: Sequence[Tensor]) -> list[Array]:
    """Run backward and return gradients for ``leaves`` (zeros if unused)."""
    backward(loss)
    return [
        t.grad if t.grad is not None else np.zeros_like(t.value) for t in leaves
    ]
