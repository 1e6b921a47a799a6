"""Minimal reverse-mode gradient engine on numpy arrays.

A :class:`Tensor` wraps a float64 array and records the operations that
produced it; :meth:`Tensor.backward` walks the tape in reverse
topological order and accumulates vector-Jacobian products into the
``grad`` field of every tensor with ``requires_grad``.

Beyond the generic arithmetic ops, three fused primitives carry
hand-derived derivatives with series branches so they stay exact and
finite at zero input:

* :func:`l2_normalize` - row-wise x/||x|| with zero rows mapped to zero;
* :func:`radial_sinh`  - sqrt(K) sinh(||x||/sqrt(K)) x/||x||, the space
  part of the origin-based exponential map;
* :func:`radial_asinh` - sqrt(K) asinh(||x||/sqrt(K)) x/||x||, the space
  part of the origin-based logarithmic map applied to a lifted vector.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor", "const", "add", "mul", "matmul", "exp", "log", "sqrt", "sinh",
    "cosh", "tanh", "tsum", "tmean", "reshape", "transpose", "concat",
    "take_rows", "take_along", "l2_normalize", "radial_sinh", "radial_asinh",
    "softmax", "logsumexp", "cross_entropy", "gelu", "layer_norm",
]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents: tuple = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def zero_grad(self):
        self.grad = None

    def backward(self, seed: np.ndarray | None = None):
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed requires a scalar output")
            seed = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in seen:
                continue
            if expanded:
                seen.add(id(node))
                topo.append(node)
            else:
                stack.append((node, True))
                for p in node._parents:
                    if id(p) not in seen and p.requires_grad:
                        stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.asarray(seed, dtype=np.float64)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.grad is None:
                node.grad = g.copy()
            else:
                node.grad = node.grad + g
            if node._vjp is None:
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if not parent.requires_grad or pg is None:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __neg__(self):
        return mul(self, const(-1.0))

    def __sub__(self, other):
        return add(self, -_wrap(other))

    def __rsub__(self, other):
        return add(_wrap(other), -self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _wrap(other)
        return mul(self, _pow_const(other, -1.0))

    def __rtruediv__(self, other):
        return mul(_wrap(other), _pow_const(self, -1.0))

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __pow__(self, exponent):
        return _pow_const(self, float(exponent))

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def const(value) -> Tensor:
    return Tensor(value, requires_grad=False)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else const(value)


def _node(data, parents, vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- arithmetic --------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.data.shape),
                            _unbroadcast(g * a.data, b.data.shape)))


def _pow_const(a: Tensor, p: float) -> Tensor:
    data = a.data ** p
    return _node(data, (a,), lambda g: (g * p * a.data ** (p - 1.0),))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        ad_, bd = a.data, b.data
        if ad_.ndim == 1 and bd.ndim == 1:
            return g * bd, g * ad_
        if ad_.ndim == 1:
            # (k,) @ (..., k, r) -> (..., r)
            ga = g @ np.swapaxes(bd, -1, -2)
            gb = ad_[:, None] * g[..., None, :]
        elif bd.ndim == 1:
            # (..., m, k) @ (k,) -> (..., m)
            ga = g[..., :, None] * bd
            gb = np.swapaxes(ad_, -1, -2) @ g
        else:
            ga = g @ np.swapaxes(bd, -1, -2)
            gb = np.swapaxes(ad_, -1, -2) @ g
        return _unbroadcast(ga, ad_.shape), _unbroadcast(gb, bd.shape)

    return _node(a.data @ b.data, (a, b), vjp)


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)
    return _node(data, (a,), lambda g: (g * data,))


def log(a: Tensor) -> Tensor:
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a: Tensor) -> Tensor:
    data = np.sqrt(a.data)
    return _node(data, (a,), lambda g: (g * 0.5 / data,))


def sinh(a: Tensor) -> Tensor:
    return _node(np.sinh(a.data), (a,), lambda g: (g * np.cosh(a.data),))


def cosh(a: Tensor) -> Tensor:
    return _node(np.cosh(a.data), (a,), lambda g: (g * np.sinh(a.data),))


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)
    return _node(data, (a,), lambda g: (g * (1.0 - data * data),))


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return _node(data, (a,), vjp)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


# -- structure ---------------------------------------------------------

def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a: Tensor, axes) -> Tensor:
    inverse = np.argsort(axes)
    return _node(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def concat(parts: list[Tensor], axis: int = -1) -> Tensor:
    datas = [p.data for p in parts]
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(parts))
        )

    return _node(np.concatenate(datas, axis=axis), tuple(parts), vjp)


def take_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather (embedding lookup); backward scatter-adds."""
    ids = np.asarray(ids)

    def vjp(g):
        acc = np.zeros_like(table.data)
        np.add.at(acc, ids.reshape(-1), g.reshape(-1, table.data.shape[-1]))
        return (acc,)

    return _node(table.data[ids], (table,), vjp)


def take_along(a: Tensor, idx: np.ndarray) -> Tensor:
    """Gather along the last axis with integer indices of matching rank."""
    idx = np.asarray(idx)

    def vjp(g):
        acc = np.zeros_like(a.data)
        np.put_along_axis(acc, idx, g, axis=-1)
        return (acc,)

    return _node(np.take_along_axis(a.data, idx, axis=-1), (a,), vjp)


# -- fused geometric primitives (row-wise along the last axis) ---------

_SERIES_TAU = 1e-3  # switch to the series branch below this ||x||/sqrt(K)


def _row_norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt((x * x).sum(axis=-1, keepdims=True))


def l2_normalize(a: Tensor) -> Tensor:
    """x / ||x|| per row; zero rows map to zero with zero gradient."""
    n = _row_norm(a.data)
    safe = np.where(n > 0.0, n, 1.0)
    u = a.data / safe

    def vjp(g):
        dot = (u * g).sum(axis=-1, keepdims=True)
        out = (g - u * dot) / safe
        return (np.where(n > 0.0, out, 0.0),)

    return _node(u, (a,), vjp)


def radial_sinh(a: Tensor, K: float) -> Tensor:
    """sqrt(K) sinh(||x||/sqrt(K)) x/||x||: exponential-map space part."""
    rk = np.sqrt(K)
    m = _row_norm(a.data)
    tau = m / rk
    small = tau < _SERIES_TAU
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(small, 1.0 + tau**2 / 6.0 + tau**4 / 120.0,
                     np.sinh(np.where(small, 1.0, tau)) / np.where(small, 1.0, tau))
        psi = np.where(
            small,
            (1.0 + tau**2 / 10.0) / (3.0 * K),
            (m * np.cosh(tau) - rk * np.sinh(tau)) / np.where(small, 1.0, m**3),
        )
    out = f * a.data

    def vjp(g):
        dot = (a.data * g).sum(axis=-1, keepdims=True)
        return (f * g + psi * dot * a.data,)

    return _node(out, (a,), vjp)


def radial_asinh(a: Tensor, K: float) -> Tensor:
    """sqrt(K) asinh(||x||/sqrt(K)) x/||x||: logarithmic-map space part."""
    rk = np.sqrt(K)
    m = _row_norm(a.data)
    sig = m / rk
    small = sig < _SERIES_TAU
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(small, 1.0 - sig**2 / 6.0 + 3.0 * sig**4 / 40.0,
                     np.arcsinh(np.where(small, 1.0, sig)) / np.where(small, 1.0, sig))
        psi = np.where(
            small,
            -(1.0 - 9.0 * sig**2 / 10.0) / (3.0 * K),
            rk * (m / np.sqrt(K + m**2) - np.arcsinh(sig)) / np.where(small, 1.0, m**3),
        )
    out = f * a.data

    def vjp(g):
        dot = (a.data * g).sum(axis=-1, keepdims=True)
        return (f * g + psi * dot * a.data,)

    return _node(out, (a,), vjp)


# -- composite neural-net ops ------------------------------------------

def softmax(a: Tensor, axis: int = -1) -> Tensor:
    # Subtracting a detached max is exact: softmax is shift invariant.
    shift = const(a.data.max(axis=axis, keepdims=True))
    e = exp(a - shift)
    return e / tsum(e, axis=axis, keepdims=True)


def logsumexp(a: Tensor, axis: int = -1) -> Tensor:
    shift = const(a.data.max(axis=axis, keepdims=True))
    s = log(tsum(exp(a - shift), axis=axis, keepdims=True)) + shift
    return reshape(s, s.data.squeeze(axis=axis).shape)


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer targets under row logits."""
    targets = np.asarray(targets, dtype=np.int64)
    lse = logsumexp(logits, axis=-1)
    picked = take_along(logits, targets[..., None])
    picked = reshape(picked, targets.shape)
    return tmean(lse - picked)


def gelu(a: Tensor) -> Tensor:
    c = np.sqrt(2.0 / np.pi)
    return 0.5 * a * (1.0 + tanh(c * (a + 0.044715 * a * a * a)))


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = tmean(a, axis=-1, keepdims=True)
    centered = a - mu
    var = tmean(centered * centered, axis=-1, keepdims=True)
    return centered / sqrt(var + eps) * gain + bias
