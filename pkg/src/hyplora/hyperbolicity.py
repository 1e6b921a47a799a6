"""Sampled four-point hyperbolicity estimation over finite metric spaces.

The tree-likeness score of a metric space is the smallest delta such
that the four-point condition

    [a, c]_w >= min([a, b]_w, [b, c]_w) - delta

holds for every quadruple, where [x, y]_w is the Gromov product.  For a
single quadruple the tightest delta is independent of which of the four
points serves as the base w, and equals half the gap between the two
largest of the three pairwise distance-sum pairings; both forms are
implemented and cross-checked in the tests.

``estimate_delta`` follows the sampling protocol: draw uniform
4-subsets with a seeded generator, take the maximum quadruple delta,
and normalize by the exact diameter into delta_rel = 2 delta / diam,
which lies in [0, 1].  ``exact_delta`` is the exhaustive max-min sweep
used as a brute-force oracle for small spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientPointsError, ValidationError
from .graphs import Graph, bfs_distances, largest_component

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric nonnegative distances with zero diagonal over n points.

    Off-diagonal entries must be positive: collapse duplicate points
    before constructing (the factory functions here do).
    """

    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError("distance matrix must be square")
        if not np.allclose(d, d.T, atol=1e-12, rtol=0.0):
            raise ValidationError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0.0):
            raise ValidationError("diagonal must be exactly zero")
        off = d[~np.eye(d.shape[0], dtype=bool)]
        if off.size and not np.all(off > 0.0):
            raise ValidationError("off-diagonal distances must be positive")

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def diameter(self) -> float:
        return float(self.d.max()) if self.n > 1 else 0.0


@dataclass(frozen=True)
class HyperbolicityResult:
    delta: float
    delta_rel: float
    diameter: float
    samples: int
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.delta <= self.diameter / 2.0 + 1e-9):
            raise ValidationError(
                f"delta {self.delta} outside [0, diameter/2] for diameter {self.diameter}"
            )
        if abs(self.delta_rel - 2.0 * self.delta / self.diameter) > 1e-12:
            raise ValidationError("delta_rel must equal 2*delta/diameter")


def gromov_product(dm: DistanceMatrix, a: int, b: int, w: int) -> float:
    """[a, b]_w = (d(a,w) + d(b,w) - d(a,b)) / 2."""
    d = dm.d
    n = dm.n
    for idx in (a, b, w):
        if not 0 <= idx < n:
            raise ValidationError(f"point index {idx} out of range for n={n}")
    return 0.5 * (d[a, w] + d[b, w] - d[a, b])


def delta_four_tuple(dm: DistanceMatrix, a: int, b: int, c: int, w: int) -> float:
    """Tightest delta for one quadruple with base point w.

    Maximum over relabelings (x, y, z) of {a, b, c} of
    (min([x, y]_w, [y, z]_w) - [x, z]_w)+.
    """
    if len({a, b, c, w}) != 4:
        raise ValidationError("the four point indices must be distinct")
    gab = gromov_product(dm, a, b, w)
    gbc = gromov_product(dm, b, c, w)
    gac = gromov_product(dm, a, c, w)
    worst = max(
        min(gab, gbc) - gac,
        min(gab, gac) - gbc,
        min(gac, gbc) - gab,
    )
    return max(worst, 0.0)


def _delta_of_quadruples(d: np.ndarray, quads: np.ndarray) -> np.ndarray:
    """Vectorized quadruple delta via the distance-sum pairing form.

    (S1 - S2)/2 over the three pairings; identical to the base-fixed
    Gromov-product maximum for every quadruple.
    """
    x, y, z, w = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
    sums = np.stack((d[x, y] + d[z, w], d[x, z] + d[y, w], d[x, w] + d[y, z]))
    sums.sort(axis=0)
    return 0.5 * (sums[2] - sums[1])


def estimate_delta(dm: DistanceMatrix, n_samples: int, seed: int) -> HyperbolicityResult:
    """Maximum quadruple delta over uniformly sampled 4-subsets.

    Deterministic for a fixed (matrix, n_samples, seed) triple.  The
    diameter in the normalization is exact, never sampled.
    """
    if dm.n < 4:
        raise InsufficientPointsError(f"need at least 4 distinct points, got {dm.n}")
    if n_samples < 1:
        raise ValidationError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    quads = np.empty((n_samples, 4), dtype=np.int64)
    for i in range(n_samples):
        quads[i] = rng.choice(dm.n, size=4, replace=False)
    delta = float(_delta_of_quadruples(dm.d, quads).max())
    delta = max(delta, 0.0)
    diam = dm.diameter()
    return HyperbolicityResult(
        delta=delta, delta_rel=2.0 * delta / diam, diameter=diam,
        samples=n_samples, seed=seed,
    )


def delta_over_all_quadruples(dm: DistanceMatrix, chunk: int = 200_000) -> float:
    """Maximum quadruple delta enumerated over every 4-subset."""
    from itertools import combinations, islice

    if dm.n < 4:
        raise InsufficientPointsError(f"need at least 4 distinct points, got {dm.n}")
    best = 0.0
    it = combinations(range(dm.n), 4)
    while True:
        block = np.array(list(islice(it, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        best = max(best, float(_delta_of_quadruples(dm.d, block).max()))
    return best


def exact_delta(dm: DistanceMatrix) -> float:
    """Exhaustive four-point delta via the max-min product sweep.

    For every base point w this takes max over (a, c) of
    max_b min([a, b]_w, [b, c]_w) - [a, c]_w.  Cubic per base point;
    intended as a test oracle for small spaces (n <= ~60).
    """
    d = dm.d
    n = dm.n
    best = 0.0
    for w in range(n):
        g = 0.5 * (d[:, w][:, None] + d[w, :][None, :] - d)
        maxmin = np.max(np.minimum(g[:, :, None], g[None, :, :]), axis=1)
        best = max(best, float((maxmin - g).max()))
    return max(best, 0.0)


def _collapse_duplicates(dist: np.ndarray) -> np.ndarray:
    """Drop rows/columns closer than DUPLICATE_TOL to a kept representative."""
    keep: list[int] = []
    for i in range(dist.shape[0]):
        if all(dist[i, j] >= DUPLICATE_TOL for j in keep):
            keep.append(i)
    idx = np.array(keep, dtype=np.int64)
    out = dist[np.ix_(idx, idx)]
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return out


def pairwise_euclidean(X: np.ndarray) -> DistanceMatrix:
    """Euclidean distances between rows, with duplicates collapsed.

    Rows closer than ``DUPLICATE_TOL`` to an already-kept representative
    are dropped so the result satisfies the positivity invariant.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError("expected a nonempty 2-d array of row vectors")
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return DistanceMatrix(_collapse_duplicates(np.sqrt(d2)))


def graph_shortest_paths(g: Graph) -> DistanceMatrix:
    """BFS metric of the largest connected component of ``g``."""
    comp = largest_component(g)
    return DistanceMatrix(bfs_distances(comp).astype(float))


def sample_sphere_metric(n_points: int, seed: int) -> DistanceMatrix:
    """Great-circle distances between uniform points on the unit 2-sphere.

    Points are drawn by normalizing Gaussian triples, which is exactly
    uniform and seedable.
    """
    if n_points < 4:
        raise InsufficientPointsError("need at least 4 sphere points")
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_points, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    d = np.arccos(np.clip(X @ X.T, -1.0, 1.0))
    np.fill_diagonal(d, 0.0)
    # Coincident draws are measure-zero but would violate positivity.
    return DistanceMatrix(_collapse_duplicates(d))


@dataclass(frozen=True)
class PromptLevelResult:
    mean_delta: float
    std_delta: float
    mean_delta_rel: float
    std_delta_rel: float
    per_prompt: tuple[HyperbolicityResult, ...]
    skipped: int


def prompt_level_delta(
    embeddings: np.ndarray,
    prompts: list[tuple[int, int]],
    n_samples: int,
    seed: int,
    stream: np.ndarray | None = None,
) -> PromptLevelResult:
    """Per-prompt hyperbolicity of token embeddings, averaged.

    Each prompt is a half-open [start, end) range of token positions;
    its tokens form one metric space under the Euclidean metric
    (duplicates collapsed).  With ``stream`` given the ranges index that
    id sequence and each id selects its embedding row; without it the
    ranges index embedding rows directly.  Prompts with fewer than 4
    distinct tokens are skipped and tallied.
    """
    embeddings = np.asarray(embeddings, dtype=float)
    if stream is not None:
        stream = np.asarray(stream, dtype=np.int64)
        if stream.size and (stream.min() < 0 or stream.max() >= embeddings.shape[0]):
            raise ValidationError("token stream references ids beyond the embedding rows")
    bound = embeddings.shape[0] if stream is None else stream.size
    results: list[HyperbolicityResult] = []
    skipped = 0
    for start, end in prompts:
        if not (0 <= start < end <= bound):
            raise ValidationError(f"prompt range [{start}, {end}) out of bounds")
        rows = embeddings[start:end] if stream is None else embeddings[stream[start:end]]
        dm = pairwise_euclidean(rows)
        if dm.n < 4:
            skipped += 1
            continue
        # One shared seed: identical prompts score identically.
        results.append(estimate_delta(dm, n_samples, seed))
    if not results:
        raise InsufficientPointsError("every prompt had fewer than 4 distinct tokens")
    deltas = np.array([r.delta for r in results])
    rels = np.array([r.delta_rel for r in results])
    return PromptLevelResult(
        mean_delta=float(deltas.mean()),
        std_delta=float(deltas.std()),
        mean_delta_rel=float(rels.mean()),
        std_delta_rel=float(rels.std()),
        per_prompt=tuple(results),
        skipped=skipped,
    )
