"""Token frequency statistics: counting, power-law fitting, norm binning.

The tail of a count distribution is fit with the continuous-
approximation maximum-likelihood estimator

    gamma = 1 + n_tail / sum(ln(f_i / (x_min - 1/2)))

over observations f_i >= x_min.  When no cutoff is supplied, x_min is
chosen to minimize the Kolmogorov-Smirnov distance between the
empirical tail and the fitted tail, evaluated on the survival function
S(x) = ((x - 1/2) / (x_min - 1/2))^(1 - gamma).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, ValidationError

MIN_TAIL = 10


@dataclass(frozen=True)
class FrequencyTable:
    """Exact multiset counts of token ids."""

    counts: dict[int, int]
    total: int

    def __post_init__(self):
        if not self.counts:
            raise ValidationError("frequency table must not be empty")
        if any(c < 1 for c in self.counts.values()):
            raise ValidationError("all counts must be >= 1")
        if self.total != sum(self.counts.values()):
            raise ValidationError("total must equal the sum of counts")

    def values(self) -> np.ndarray:
        return np.array(sorted(self.counts.values()), dtype=float)

    def max_id(self) -> int:
        return max(self.counts)


def count_frequencies(token_stream) -> FrequencyTable:
    """Exact counts of a nonempty id sequence."""
    ids = np.asarray(list(token_stream) if not isinstance(token_stream, np.ndarray) else token_stream)
    if ids.size == 0:
        raise ValidationError("token stream is empty")
    if not np.issubdtype(ids.dtype, np.integer):
        ids = ids.astype(np.int64)
    uniq, cnt = np.unique(ids, return_counts=True)
    counts = {int(t): int(c) for t, c in zip(uniq, cnt)}
    return FrequencyTable(counts=counts, total=int(ids.size))


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    x_min: float
    n_tail: int
    ks: float

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValidationError(f"fitted exponent must exceed 1, got {self.gamma}")
        if self.n_tail < MIN_TAIL:
            raise ValidationError(f"tail must hold >= {MIN_TAIL} observations")


def _fit_at(values: np.ndarray, x_min: float) -> PowerLawFit:
    tail = values[values >= x_min]
    n_tail = tail.size
    if n_tail < MIN_TAIL:
        raise ValidationError(
            f"tail at x_min={x_min} has {n_tail} observations; need >= {MIN_TAIL}"
        )
    if tail.max() == tail.min():
        raise DegenerateFitError("all tail frequencies equal; exponent diverges")
    log_sum = float(np.log(tail / (x_min - 0.5)).sum())
    gamma = 1.0 + n_tail / log_sum
    # KS distance between empirical and fitted survival functions.
    tail_sorted = np.sort(tail)
    uniq = np.unique(tail_sorted)
    emp = 1.0 - np.searchsorted(tail_sorted, uniq, side="left") / n_tail
    model = ((uniq - 0.5) / (x_min - 0.5)) ** (1.0 - gamma)
    ks = float(np.abs(emp - model).max())
    return PowerLawFit(gamma=gamma, x_min=float(x_min), n_tail=int(n_tail), ks=ks)


def fit_power_law(ft: FrequencyTable, x_min: float | None = None) -> PowerLawFit:
    """MLE exponent of the count distribution's tail.

    With ``x_min`` given, fit that tail directly; otherwise scan the
    distinct count values (the 200 smallest, where viable tails live)
    and keep the cutoff with the smallest KS distance.
    """
    values = ft.values()
    if x_min is not None:
        if x_min < 1:
            raise ValidationError("x_min must be >= 1")
        return _fit_at(values, float(x_min))
    candidates = np.unique(values)
    if candidates.size > 200:
        candidates = candidates[:200]
    best: PowerLawFit | None = None
    for cand in candidates:
        try:
            fit = _fit_at(values, float(cand))
        except (ValidationError, DegenerateFitError):
            continue
        if best is None or fit.ks < best.ks:
            best = fit
    if best is None:
        raise DegenerateFitError("no cutoff admits a power-law fit (tail too small or flat)")
    return best


def sample_zipf_counts(gamma: float, x_min: int, size: int, seed: int) -> np.ndarray:
    """Draws from the discrete power law P(X = x) ~ x^(-gamma), x >= x_min.

    Exact inverse-CDF sampling over a table up to 10^6; the residual
    tail mass (vanishing for gamma near 2) falls back to the continuous
    Pareto inverse, which only affects the magnitude of already-huge
    draws.
    """
    if gamma <= 1.0:
        raise ValidationError("gamma must exceed 1")
    if x_min < 1:
        raise ValidationError("x_min must be >= 1")
    rng = np.random.default_rng(seed)
    cap = 1_000_000
    support = np.arange(x_min, cap + 1, dtype=float)
    weights = support ** (-gamma)
    # Total mass including the analytic tail beyond the table.
    tail_mass = cap ** (1.0 - gamma) / (gamma - 1.0)
    total = weights.sum() + tail_mass
    cdf = np.cumsum(weights) / total
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    draws = x_min + idx.astype(np.int64)
    overflow = idx >= support.size
    if overflow.any():
        v = rng.random(int(overflow.sum()))
        draws[overflow] = np.floor(cap * v ** (-1.0 / (gamma - 1.0))).astype(np.int64)
    return draws


@dataclass(frozen=True)
class NormBin:
    lo: float
    hi: float
    mean_frequency: float
    count: int


def _embedding_norms(embeddings: np.ndarray, ids: np.ndarray) -> np.ndarray:
    embeddings = np.asarray(embeddings, dtype=float)
    if ids.size and (ids.min() < 0 or ids.max() >= embeddings.shape[0]):
        raise ValidationError(
            f"token id out of range for embedding matrix with {embeddings.shape[0]} rows"
        )
    return np.linalg.norm(embeddings[ids], axis=1)


def norm_frequency_bins(
    embeddings: np.ndarray, ft: FrequencyTable, n_bins: int = 30
) -> list[NormBin]:
    """Mean token frequency per equal-width embedding-norm bin.

    Bins cover [min norm, max norm] of the counted tokens; empty bins
    are reported with count 0.
    """
    if n_bins < 1:
        raise ValidationError("n_bins must be positive")
    ids = np.array(sorted(ft.counts), dtype=np.int64)
    freqs = np.array([ft.counts[int(t)] for t in ids], dtype=float)
    norms = _embedding_norms(embeddings, ids)
    lo, hi = float(norms.min()), float(norms.max())
    if hi == lo:
        return [NormBin(lo, hi, float(freqs.mean()), int(ids.size))] + [
            NormBin(lo, hi, 0.0, 0) for _ in range(n_bins - 1)
        ]
    edges = np.linspace(lo, hi, n_bins + 1)
    which = np.clip(np.digitize(norms, edges) - 1, 0, n_bins - 1)
    bins = []
    for b in range(n_bins):
        mask = which == b
        count = int(mask.sum())
        mean = float(freqs[mask].mean()) if count else 0.0
        bins.append(NormBin(float(edges[b]), float(edges[b + 1]), mean, count))
    return bins


def tokens_in_norm_range(
    embeddings: np.ndarray,
    vocab: dict[int, str],
    lo: float,
    hi: float,
    ft: FrequencyTable | None = None,
) -> list[str]:
    """Vocabulary tokens whose embedding norm lies in [lo, hi),
    most frequent first (unseen tokens count as frequency 0)."""
    if not lo < hi:
        raise ValidationError(f"need lo < hi, got [{lo}, {hi})")
    ids = np.array(sorted(vocab), dtype=np.int64)
    norms = _embedding_norms(embeddings, ids)
    counts = ft.counts if ft is not None else {}
    selected = [
        (-(counts.get(int(t), 0)), int(t))
        for t, nm in zip(ids, norms)
        if lo <= nm < hi
    ]
    selected.sort()
    return [vocab[t] for _, t in selected]
