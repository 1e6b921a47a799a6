"""Low-rank adapter forward rules and their exact gradients.

Three update rules share the frozen base map ``W x``:

* ``euclidean_lora_forward``  - plain additive low-rank update ``B A x``;
* ``tangent_lora_forward``    - the same rank-r update routed through the
  origin-based exp/log maps.  Because the maps are mutually inverse the
  pipeline collapses to the Euclidean rule; this function exists to
  demonstrate that cancellation numerically;
* ``hyplora_forward``         - the update applied directly on the
  hyperboloid via the two-stage lift transform, which does *not* cancel
  and injects norm-dependent higher-order terms.

``adapter_gradients`` differentiates the hyperbolic rule exactly in
reverse mode through every step (normalization, exponential map, lifts,
logarithmic map); the frozen base matrix receives no gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .errors import DimensionError, ValidationError
from .lorentz import (
    ROTATION,
    VARIANTS,
    CurvedSpace,
    TangentAtOrigin,
    exp_map_origin,
    llr_transform,
    log_map_origin,
)

CURVATURE_GRID = (0.1, 0.5, 1.0, 2.0)
DEFAULT_CURVATURE = 1.0


@dataclass(frozen=True, eq=False)
class AdapterParams:
    """Frozen base matrix plus trainable low-rank state.

    ``W`` (d x k) is never updated.  For the ``rotation`` variant A is
    r x k and B is d x r; the ``boost`` variant consumes the recomputed
    time coordinate at each stage, so A is r x (k+1) and B is d x (r+1).
    ``norm_scale`` is the learnable scalar applied after L2-normalizing
    the input.
    """

    W: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    rank: int
    space: CurvedSpace
    norm_scale: float = 1.0
    variant: str = ROTATION

    def __post_init__(self):
        object.__setattr__(self, "W", np.asarray(self.W, dtype=float))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        d, k = self.W.shape
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        # rank 0 is the degenerate no-op adapter (empty factors).
        if not 0 <= self.rank <= min(d, k):
            raise ValidationError(f"rank must satisfy 0 <= r <= min(d, k)={min(d, k)}")
        if not self.norm_scale > 0:
            raise ValidationError("norm_scale must be positive")
        a_cols = k if self.variant == ROTATION else k + 1
        b_cols = self.rank if self.variant == ROTATION else self.rank + 1
        if self.A.shape != (self.rank, a_cols):
            raise DimensionError(f"A must be {(self.rank, a_cols)}, got {self.A.shape}")
        if self.B.shape != (d, b_cols):
            raise DimensionError(f"B must be {(d, b_cols)}, got {self.B.shape}")
        if self.space.n != k:
            raise DimensionError(f"space dimension {self.space.n} != input dim {k}")

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def k(self) -> int:
        return self.W.shape[1]

    def with_factors(self, A=None, B=None, norm_scale=None) -> "AdapterParams":
        return replace(
            self,
            A=self.A if A is None else A,
            B=self.B if B is None else B,
            norm_scale=self.norm_scale if norm_scale is None else norm_scale,
        )


def init_adapter_params(
    W: np.ndarray,
    rank: int,
    K: float = DEFAULT_CURVATURE,
    variant: str = ROTATION,
    seed: int = 0,
    norm_scale: float = 1.0,
) -> AdapterParams:
    """Fresh adapter state: A uniform at Kaiming scale 1/sqrt(k), B zero.

    Zero B makes the initial adapter an exact no-op, mirroring the
    convention that adaptation starts from the identity.
    """
    W = np.asarray(W, dtype=float)
    d, k = W.shape
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(k)
    a_cols = k if variant == ROTATION else k + 1
    b_cols = rank if variant == ROTATION else rank + 1
    A = rng.uniform(-bound, bound, size=(rank, a_cols))
    B = np.zeros((d, b_cols))
    return AdapterParams(
        W=W, A=A, B=B, rank=rank, space=CurvedSpace(K, k),
        norm_scale=norm_scale, variant=variant,
    )


def _check_input(x: np.ndarray, p: AdapterParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (p.k,):
        raise DimensionError(f"input must have shape ({p.k},), got {x.shape}")
    return x


def _require_rotation(p: AdapterParams, op: str):
    if p.variant != ROTATION:
        raise ValidationError(f"{op} is defined for the rotation variant only")


def euclidean_lora_forward(x: np.ndarray, p: AdapterParams) -> np.ndarray:
    """W x + B (A x), the additive low-rank rule."""
    _require_rotation(p, "euclidean_lora_forward")
    x = _check_input(x, p)
    return p.W @ x + p.B @ (p.A @ x)


def tangent_lora_forward(x: np.ndarray, p: AdapterParams) -> np.ndarray:
    """The low-rank update routed through exp/log maps at the origin.

    Pipeline: prepend a zero coordinate, exponential map, logarithmic
    map, apply B A, exponential map, logarithmic map, strip the zero
    coordinate.  Since log and exp are mutually inverse this equals the
    Euclidean rule up to rounding, for every curvature.
    """
    _require_rotation(p, "tangent_lora_forward")
    x = _check_input(x, p)
    k_space = p.space
    d_space = CurvedSpace(p.space.K, p.d)
    back = log_map_origin(exp_map_origin(TangentAtOrigin(x), k_space), k_space)
    update = p.B @ (p.A @ back.space)
    out = log_map_origin(exp_map_origin(TangentAtOrigin(update), d_space), d_space)
    return p.W @ x + out.space


def _normalized_input(x: np.ndarray, p: AdapterParams) -> np.ndarray | None:
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return None
    return p.norm_scale * x / nx


def hyplora_forward(x: np.ndarray, p: AdapterParams) -> np.ndarray:
    """Adapter update computed directly on the hyperboloid.

    Steps: (1) L2-normalize the input and rescale by the learnable
    norm scale; (2) prepend a zero coordinate and map through the
    origin-based exponential map; (3) apply the two-stage lift
    transform with A and B; (4) map back with the logarithmic map and
    strip the leading coordinate; (5) add the frozen base output W x.

    A zero input has no defined direction; the update is zero there.
    """
    x = _check_input(x, p)
    xhat = _normalized_input(x, p)
    if xhat is None:
        return p.W @ x
    k_space = p.space
    point = exp_map_origin(TangentAtOrigin(xhat), k_space)
    z = llr_transform(p.A, p.B, point, p.variant, k_space)
    tangent = log_map_origin(z, CurvedSpace(p.space.K, p.d))
    stripped = tangent.full()
    assert abs(stripped[0]) <= 1e-7, "leading coordinate must vanish before strip"
    return p.W @ x + stripped[1:]


def hyplora_update_closed(xhat: np.ndarray, A: np.ndarray, B: np.ndarray, K) -> np.ndarray:
    """Closed form of the rotation-variant hyperbolic update on ``xhat``.

    Algebraically identical to the exp / lift / lift / log pipeline:
    with b = B A (sqrt(K) sinh(|xhat|/sqrt(K)) xhat/|xhat|), the update
    is sqrt(K) asinh(|b|/sqrt(K)) b/|b|.  Dtype-generic so asymptotic
    behaviour can be probed in extended precision.
    """
    dt = np.result_type(xhat, A, B, K)
    xhat = np.asarray(xhat, dtype=dt)
    rk = np.sqrt(np.asarray(K, dtype=dt))
    s = np.sqrt((xhat * xhat).sum())
    if s == 0:
        return np.zeros(B.shape[0], dtype=dt)
    p_space = rk * np.sinh(s / rk) * (xhat / s)
    b = np.asarray(B, dtype=dt) @ (np.asarray(A, dtype=dt) @ p_space)
    m = np.sqrt((b * b).sum())
    if m == 0:
        return np.zeros(B.shape[0], dtype=dt)
    return rk * np.arcsinh(m / rk) * (b / m)


def taylor_delta_approx(x: np.ndarray, p: AdapterParams) -> np.ndarray:
    """Leading-order polynomial surrogate (1 + |xhat|^2 / 6K) B A xhat.

    This keeps the cubic term contributed by the exponential map but
    linearizes the logarithmic map, so its residual against the exact
    hyperbolic update is itself cubic in |xhat| with coefficient
    |B A u|^2 / 6K (u the input direction).  See
    :func:`taylor_delta_third_order` for the full third-order expansion.
    """
    _require_rotation(p, "taylor_delta_approx")
    x = _check_input(x, p)
    xhat = _normalized_input(x, p)
    if xhat is None:
        return np.zeros(p.d)
    s2 = float(xhat @ xhat)
    return (1.0 + s2 / (6.0 * p.space.K)) * (p.B @ (p.A @ xhat))


def taylor_delta_third_order(x: np.ndarray, p: AdapterParams) -> np.ndarray:
    """Exact third-order expansion of the hyperbolic update in |xhat|.

    (1 + (|xhat|^2 - |B A xhat|^2) / 6K) B A xhat: relative to
    :func:`taylor_delta_approx` this also carries the cubic term of the
    logarithmic map, leaving a fifth-order residual.
    """
    _require_rotation(p, "taylor_delta_third_order")
    x = _check_input(x, p)
    xhat = _normalized_input(x, p)
    if xhat is None:
        return np.zeros(p.d)
    ba = p.B @ (p.A @ xhat)
    coef = 1.0 + (float(xhat @ xhat) - float(ba @ ba)) / (6.0 * p.space.K)
    return coef * ba


# -- reverse-mode gradients ---------------------------------------------

def _adapter_tensors(p: AdapterParams) -> dict[str, ad.Tensor]:
    return {
        "A": ad.Tensor(p.A.copy(), requires_grad=True),
        "B": ad.Tensor(p.B.copy(), requires_grad=True),
        "s": ad.Tensor(np.asarray(p.norm_scale), requires_grad=True),
    }


def hyplora_update_graph(
    x: ad.Tensor, A: ad.Tensor, B: ad.Tensor, s: ad.Tensor, K: float, variant: str
) -> ad.Tensor:
    """Engine subgraph of the hyperbolic update for rows of ``x``.

    Works for any leading batch shape; the adapter acts on the last
    axis.  Rows of exactly zero norm yield a zero update (their
    direction is undefined), matching :func:`hyplora_forward`.
    """
    xhat = s * ad.l2_normalize(x)
    p_space = ad.radial_sinh(xhat, K)
    if variant == ROTATION:
        a = ad.matmul(p_space, ad.transpose(A, (1, 0)))
        b = ad.matmul(a, ad.transpose(B, (1, 0)))
    else:
        p_time = ad.sqrt(ad.tsum(p_space * p_space, axis=-1, keepdims=True) + K)
        a = ad.matmul(ad.concat([p_time, p_space], axis=-1), ad.transpose(A, (1, 0)))
        y_time = ad.sqrt(ad.tsum(a * a, axis=-1, keepdims=True) + K)
        b = ad.matmul(ad.concat([y_time, a], axis=-1), ad.transpose(B, (1, 0)))
        # Zero-norm rows carry no defined direction: mask their update.
        nonzero = (x.data * x.data).sum(axis=-1, keepdims=True) > 0.0
        return ad.radial_asinh(b, K) * ad.const(nonzero.astype(float))
    return ad.radial_asinh(b, K)


def lora_update_graph(x: ad.Tensor, A: ad.Tensor, B: ad.Tensor) -> ad.Tensor:
    return ad.matmul(ad.matmul(x, ad.transpose(A, (1, 0))), ad.transpose(B, (1, 0)))


def tangent_update_graph(x: ad.Tensor, A: ad.Tensor, B: ad.Tensor, K: float) -> ad.Tensor:
    back = ad.radial_asinh(ad.radial_sinh(x, K), K)
    update = lora_update_graph(back, A, B)
    return ad.radial_asinh(ad.radial_sinh(update, K), K)


def adapter_gradients(
    x: np.ndarray, p: AdapterParams, upstream: np.ndarray
) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of ``hyplora_forward`` contracted
    with ``upstream``; returns ``{"A": ..., "B": ..., "norm_scale": ...}``.

    The frozen base W receives no gradient.  For a zero input the
    update (and hence every gradient) is identically zero.
    """
    x = _check_input(x, p)
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (p.d,):
        raise DimensionError(f"upstream must have shape ({p.d},), got {upstream.shape}")
    t = _adapter_tensors(p)
    if float(np.linalg.norm(x)) == 0.0:
        return {
            "A": np.zeros_like(p.A),
            "B": np.zeros_like(p.B),
            "norm_scale": 0.0,
        }
    delta = hyplora_update_graph(
        ad.Tensor(x), t["A"], t["B"], t["s"], p.space.K, p.variant
    )
    delta.backward(seed=upstream)
    return {
        "A": t["A"].grad,
        "B": t["B"].grad,
        "norm_scale": float(t["s"].grad),
    }
