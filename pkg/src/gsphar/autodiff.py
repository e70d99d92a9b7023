"""A small reverse-mode tape over real float64 arrays.

Only the operations the trainable models need are provided. Complex values
are carried as separate real and imaginary tensors.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("value", "grad", "parents", "requires_grad", "op")

    def __init__(self, value, parents=(), requires_grad=False, op=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        # parents: sequence of (tensor, vector-Jacobian product)
        self.parents = parents
        self.requires_grad = requires_grad or any(p.requires_grad for p, _ in parents)
        self.op = op

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"

    def backward(self):
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node.parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node.grad is None:
                continue
            for parent, vjp in node.parents:
                if not parent.requires_grad:
                    continue
                g = vjp(node.grad)
                parent.grad = g if parent.grad is None else parent.grad + g

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __getitem__(self, index):
        return take(self, index)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(value) -> Tensor:
    return Tensor(np.array(value, dtype=float), requires_grad=True)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value + b.value,
        ((a, lambda g: _unbroadcast(g, a.shape)), (b, lambda g: _unbroadcast(g, b.shape))),
    )


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.value, ((a, lambda g: -g),))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value * b.value,
        (
            (a, lambda g: _unbroadcast(g * b.value, a.shape)),
            (b, lambda g: _unbroadcast(g * a.value, b.shape)),
        ),
    )


def einsum(spec: str, a, b) -> Tensor:
    """Two-operand einsum; every input index must appear in the output or the other operand."""
    a, b = as_tensor(a), as_tensor(b)
    ins, out = spec.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    for own, other in ((sa, sb), (sb, sa)):
        missing = set(own) - set(out) - set(other)
        if missing:
            raise ValueError(f"index {missing} is summed within one operand only")
    value = np.einsum(spec, a.value, b.value)
    return Tensor(
        value,
        (
            (a, lambda g: np.einsum(f"{out},{sb}->{sa}", g, b.value)),
            (b, lambda g: np.einsum(f"{out},{sa}->{sb}", g, a.value)),
        ),
    )


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    return Tensor(np.where(mask, a.value, 0.0), ((a, lambda g: g * mask),), op="relu")


def absolute(a: Tensor) -> Tensor:
    # subgradient sign(0) = 0
    return Tensor(np.abs(a.value), ((a, lambda g: g * np.sign(a.value)),), op="absolute")


def mean(a: Tensor) -> Tensor:
    n = a.value.size
    return Tensor(a.value.mean(), ((a, lambda g: np.full(a.shape, g / n)),))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return s * (g - np.sum(g * s, axis=axis, keepdims=True))

    return Tensor(s, ((a, vjp),))


def take(a: Tensor, index) -> Tensor:
    def vjp(g):
        out = np.zeros_like(a.value)
        np.add.at(out, index, g)
        return out

    return Tensor(a.value[index], ((a, vjp),))


def stack(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    value = np.stack([t.value for t in tensors], axis=axis)

    def make(k):
        return lambda g: np.take(g, k, axis=axis)

    return Tensor(value, tuple((t, make(k)) for k, t in enumerate(tensors)))


def kink_signature(out: Tensor) -> np.ndarray:
    """Signs of every relu/absolute input in the graph of ``out``, in a fixed order.

    Two parameter points with equal signatures lie in the same smooth piece
    of a piecewise-smooth loss.
    """
    signs, seen, stack = [], set(), [out]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.op in ("relu", "absolute"):
            signs.append(np.sign(node.parents[0][0].value).ravel())
        stack.extend(p for p, _ in reversed(node.parents))
    return np.concatenate(signs) if signs else np.zeros(0)


def l1_loss(pred: Tensor, target) -> Tensor:
    return mean(absolute(pred - as_tensor(target)))


class Adam:
    """Adam updates applied in place to a list of parameter tensors."""

    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p.value = p.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
