"""Primitives for the Lorentz (hyperboloid) model of hyperbolic space.

The model with parameter K > 0 is the upper sheet

    L_K^n = { x in R^{n+1} : <x, x>_L = -K, x_0 > 0 },

where ``<u, v>_L = -u_0 v_0 + sum_i u_i v_i`` is the Lorentzian inner
product.  The sectional curvature is -1/K, so larger K means a flatter
space.  All maps here are based at the origin ``o = (sqrt(K), 0, ..., 0)``.

Everything is double precision and purely functional; no operation
mutates its inputs, so concurrent use is safe.

Numerical policy:

* exponential/logarithmic maps switch to a first-order branch when the
  tangent norm is below ``SMALL_NORM * sqrt(K)`` (sinh(t)/t is 0/0 at 0);
* arcosh arguments inside ``[1 - ARCOSH_BAND, 1)`` are treated as
  rounding noise and clamped to 1; anything below that band is a domain
  error, not a clamp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ManifoldError

# Tolerances pinned by the module contract.
MANIFOLD_ATOL = 1e-9          # |<x,x>_L + K| <= MANIFOLD_ATOL * max(1, K)
SMALL_NORM = 1e-8             # first-order branch threshold for ||v||/sqrt(K)
ARCOSH_BAND = 1e-9            # clamp band below 1 for arcosh arguments

ROTATION = "rotation"
BOOST = "boost"
VARIANTS = (ROTATION, BOOST)


@dataclass(frozen=True)
class CurvedSpace:
    """Model parameters: K > 0 and the ambient (space) dimension n."""

    K: float
    n: int

    def __post_init__(self):
        if not (self.K > 0 and math.isfinite(self.K)):
            raise ValueError(f"K must be a positive finite real, got {self.K}")
        if self.n < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.n}")

    @property
    def sqrt_k(self) -> float:
        return math.sqrt(self.K)

    def origin(self) -> "LorentzPoint":
        """The base point o = (sqrt(K), 0, ..., 0)."""
        return LorentzPoint(self.sqrt_k, np.zeros(self.n))


@dataclass(frozen=True, eq=False)
class LorentzPoint:
    """A point on the hyperboloid: positive time coordinate plus space part."""

    time: float
    space: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "space", np.asarray(self.space, dtype=float))
        object.__setattr__(self, "time", float(self.time))
        if self.space.ndim != 1:
            raise DimensionError("space part must be a 1-d vector")
        if not self.time > 0:
            raise ManifoldError(f"time coordinate must be positive, got {self.time}")

    @property
    def n(self) -> int:
        return self.space.shape[0]

    def full(self) -> np.ndarray:
        """The ambient (n+1)-vector (time, space)."""
        return np.concatenate(([self.time], self.space))


@dataclass(frozen=True, eq=False)
class TangentAtOrigin:
    """Tangent vector at the origin; the time component is identically 0."""

    space: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "space", np.asarray(self.space, dtype=float))
        if self.space.ndim != 1:
            raise DimensionError("tangent space part must be a 1-d vector")

    @property
    def n(self) -> int:
        return self.space.shape[0]

    def full(self) -> np.ndarray:
        return np.concatenate(([0.0], self.space))

    def norm(self) -> float:
        # At the origin the Lorentzian tangent norm equals the Euclidean
        # norm of the space part (the time component is zero).
        return float(np.linalg.norm(self.space))


def lorentz_inner(u: np.ndarray, v: np.ndarray) -> float:
    """Lorentzian inner product -u0*v0 + sum_i ui*vi of two ambient vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1 or u.shape[0] < 2:
        raise DimensionError(
            f"ambient vectors must share a length >= 2, got {u.shape} and {v.shape}"
        )
    return float(-u[0] * v[0] + u[1:] @ v[1:])


def manifold_violation(p: LorentzPoint, sp: CurvedSpace) -> float:
    """|<p,p>_L + K|, the deviation from hyperboloid membership."""
    return abs(-p.time * p.time + float(p.space @ p.space) + sp.K)


def assert_on_manifold(p: LorentzPoint, sp: CurvedSpace, atol: float = MANIFOLD_ATOL):
    viol = manifold_violation(p, sp)
    bound = atol * max(1.0, sp.K)
    if viol > bound:
        raise ManifoldError(
            f"point violates <x,x>_L = -K by {viol:.3e} (allowed {bound:.3e})"
        )


def lift_to_hyperboloid(space: np.ndarray, sp: CurvedSpace) -> LorentzPoint:
    """Complete a space vector to a hyperboloid point.

    The time coordinate is recomputed as sqrt(||space||^2 + K), so the
    result satisfies the membership constraint by construction.  Total
    function: every real vector lifts.
    """
    space = np.asarray(space, dtype=float)
    if space.ndim != 1:
        raise DimensionError("space vector must be 1-d")
    return LorentzPoint(math.sqrt(float(space @ space) + sp.K), space)


def exp_map_origin(v: TangentAtOrigin, sp: CurvedSpace) -> LorentzPoint:
    """Exponential map at the origin.

    exp_o(v) = cosh(||v||/sqrt(K)) o + sqrt(K) sinh(||v||/sqrt(K)) v/||v||.

    For ||v||/sqrt(K) below the small-norm threshold the first-order
    expansion o + v is used, realised as a lift of the space part so the
    result stays exactly on the hyperboloid.
    """
    rk = sp.sqrt_k
    nv = v.norm()
    if nv / rk < SMALL_NORM:
        return lift_to_hyperboloid(v.space, sp)
    t = nv / rk
    space = rk * math.sinh(t) * (v.space / nv)
    return LorentzPoint(rk * math.cosh(t), space)


def _arcosh_guarded(arg: float, context: str) -> float:
    """arcosh with the clamp band: [1 - ARCOSH_BAND, 1) -> 1, below -> error."""
    if arg < 1.0:
        if arg < 1.0 - ARCOSH_BAND:
            raise ManifoldError(
                f"{context}: arcosh argument {arg!r} below the valid domain"
            )
        return 0.0
    return math.acosh(arg)


def log_map_origin(p: LorentzPoint, sp: CurvedSpace) -> TangentAtOrigin:
    """Logarithmic map at the origin, inverse of :func:`exp_map_origin`.

    log_o(p) has zero time component and space part
    sqrt(K) * arcosh(p0/sqrt(K)) * p_space/||p_space||.
    """
    rk = sp.sqrt_k
    # -<o,p>_L / K = p0 / sqrt(K); this is the arcosh argument.
    t = _arcosh_guarded(p.time / rk, "log_map_origin")
    ns = float(np.linalg.norm(p.space))
    if t == 0.0 or ns == 0.0 or t < SMALL_NORM:
        # First-order branch: near the origin log is the space part itself.
        return TangentAtOrigin(p.space.copy())
    return TangentAtOrigin(rk * t * (p.space / ns))


def llr_transform(
    A: np.ndarray,
    B: np.ndarray,
    p: LorentzPoint,
    variant: str,
    sp: CurvedSpace,
) -> LorentzPoint:
    """Two-stage low-rank map applied directly on the hyperboloid.

    Each stage multiplies by a factor matrix and re-lifts the time
    coordinate: y = lift(A x_*), z = lift(B y_*).  The ``rotation``
    variant feeds only the space part to each factor (A: r x n,
    B: m x r); the ``boost`` variant feeds the full ambient vector
    including the recomputed time coordinate (A: r x (n+1),
    B: m x (r+1)).  The output is on the hyperboloid by construction.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError("A and B must be matrices")
    n = p.n
    if variant == ROTATION:
        if A.shape[1] != n:
            raise DimensionError(f"rotation variant needs A with {n} columns, got {A.shape}")
        r = A.shape[0]
        if B.shape[1] != r:
            raise DimensionError(f"B must have {r} columns to consume A's output, got {B.shape}")
        y = lift_to_hyperboloid(A @ p.space, sp)
        return lift_to_hyperboloid(B @ y.space, sp)
    if variant == BOOST:
        if A.shape[1] != n + 1:
            raise DimensionError(f"boost variant needs A with {n + 1} columns, got {A.shape}")
        r = A.shape[0]
        if B.shape[1] != r + 1:
            raise DimensionError(f"B must have {r + 1} columns to consume the lifted stage, got {B.shape}")
        y = lift_to_hyperboloid(A @ p.full(), sp)
        return lift_to_hyperboloid(B @ y.full(), sp)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def lorentz_distance(p: LorentzPoint, q: LorentzPoint, sp: CurvedSpace) -> float:
    """Geodesic distance sqrt(K) * arcosh(-<p,q>_L / K)."""
    assert_on_manifold(p, sp)
    assert_on_manifold(q, sp)
    arg = -lorentz_inner(p.full(), q.full()) / sp.K
    return sp.sqrt_k * _arcosh_guarded(arg, "lorentz_distance")
