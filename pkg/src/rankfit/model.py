"""The Mandelbrot ranking distribution and its maximum-likelihood fit.

The distribution assigns rank r (1-based) probability proportional to
(r + q)^(-s) over a finite support 1..N. q >= 0 flattens the head, s > 0
sets the tail decay; q = 0 restricted further to one free parameter is the
classical Zipf form.

Fitting maximizes the multinomial log-likelihood of observed counts-by-rank,
restricted and renormalized to a caller-chosen rank range. The optimizer is
a coarse grid seed (q log-spaced in [0, 32], s linear in [0.3, 3]) followed
by Nelder-Mead refinement, with the q = 0 one-dimensional optimum always
evaluated as an extra candidate so the two-parameter fit can never score
below the nested Zipf fit.

A practical note on fit ranges: counts-by-rank curves are produced by
sorting, and in the sparse tail (expected counts of order 1) sorting
flattens the curve relative to the generating law. Full-range fits on
heavily undersampled supports are therefore biased toward small q and s.
When recovering parameters from samples, restrict the range to ranks whose
counts are comfortably above sorting noise (a few tens); see the README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import (BootstrapFailure, DegenerateInput, MismatchedFitRange,
                     RankOutOfSupport)

# optimizer budget: 192 grid points + Nelder-Mead refinement + 1-D candidate
_Q_GRID = np.concatenate([[0.0], np.geomspace(0.05, 32.0, 15)])
_S_GRID = np.linspace(0.3, 3.0, 12)
_NM_MAXFEV = 260
# refinement bounds are far wider than any observed rank-frequency fit but
# keep the normalizer representable in float64
_Q_MAX = 1e4
_S_BOUNDS = (1e-3, 50.0)


@dataclass(frozen=True)
class MandelbrotParams:
    """Distribution parameters over ranks 1..support_size."""

    q: float
    s: float
    support_size: int

    def __post_init__(self):
        if self.q < 0 or not math.isfinite(self.q):
            raise ValueError(f"q must be finite and >= 0, got {self.q}")
        if self.s <= 0 or not math.isfinite(self.s):
            raise ValueError(f"s must be finite and > 0, got {self.s}")
        if self.support_size < 1:
            raise ValueError(f"support_size must be >= 1, got {self.support_size}")

    @property
    def log_normalizer(self) -> float:
        return _log_normalizer(self.q, self.s, self.support_size)


@lru_cache(maxsize=128)
def _log_normalizer(q: float, s: float, n: int) -> float:
    # log-sum-exp keeps the normalizer representable when s * log(r + q)
    # is large enough that the plain sum would underflow
    x = -s * np.log(np.arange(1, n + 1, dtype=np.float64) + q)
    m = float(x.max())
    return m + float(np.log(np.exp(x - m).sum()))


def log_prob(params: MandelbrotParams, rank: int) -> float:
    """Natural-log probability of a rank under the distribution."""
    if not 1 <= rank <= params.support_size:
        raise RankOutOfSupport(
            f"rank {rank} outside 1..{params.support_size}")
    return -params.s * math.log(rank + params.q) - params.log_normalizer


def log_probs(params: MandelbrotParams, ranks: np.ndarray) -> np.ndarray:
    """Vectorized log_prob. Ranks must already lie inside the support."""
    ranks = np.asarray(ranks)
    if ranks.size and (ranks.min() < 1 or ranks.max() > params.support_size):
        raise RankOutOfSupport("rank outside support")
    return -params.s * np.log(ranks + params.q) - params.log_normalizer


def sample_ranks(params: MandelbrotParams, n_tokens: int, seed) -> np.ndarray:
    """Draw i.i.d. ranks by inverse-CDF sampling from the exact distribution.

    `seed` is anything numpy's default_rng accepts (int, sequence of ints,
    or a Generator). Returns an int64 array of ranks in 1..support_size.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    r = np.arange(1, params.support_size + 1, dtype=np.float64)
    cdf = np.cumsum((r + params.q) ** (-params.s))
    cdf /= cdf[-1]
    u = rng.random(n_tokens)
    return (np.searchsorted(cdf, u, side="left") + 1).astype(np.int64)


class EmpiricalRankDist:
    """Observed counts in rank order (rank 1 first), non-increasing."""

    __slots__ = ("counts", "total")

    def __init__(self, counts_by_rank: Sequence[int] | np.ndarray):
        counts = np.asarray(counts_by_rank, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise DegenerateInput("counts_by_rank must be a non-empty 1-D sequence")
        if counts.min() <= 0:
            raise DegenerateInput("counts must be positive")
        if np.any(np.diff(counts) > 0):
            raise DegenerateInput("counts must be non-increasing in rank")
        self.counts = counts
        self.total = int(counts.sum())

    @property
    def n_ranks(self) -> int:
        return int(self.counts.size)

    @classmethod
    def from_counts(cls, counts: Iterable[int]) -> "EmpiricalRankDist":
        """Build from unordered per-type counts; zeros are dropped."""
        arr = np.asarray(list(counts), dtype=np.int64)
        arr = arr[arr > 0]
        if arr.size == 0:
            raise DegenerateInput("no positive counts")
        arr[::-1].sort()  # descending in place
        return cls(arr)

    @classmethod
    def from_rank_draws(cls, draws: np.ndarray) -> "EmpiricalRankDist":
        """Build from sampled rank indices (output of sample_ranks)."""
        draws = np.asarray(draws)
        if draws.size == 0:
            raise DegenerateInput("no draws")
        return cls.from_counts(np.bincount(draws))

    @classmethod
    def from_streams(cls, streams) -> "EmpiricalRankDist":
        from collections import Counter
        c = Counter()
        for stream in streams:
            c.update(stream)
        if not c:
            raise DegenerateInput("no tokens in any stream")
        return cls.from_counts(c.values())

    @classmethod
    def from_table(cls, table) -> "EmpiricalRankDist":
        return cls(np.asarray(table.counts_by_rank(), dtype=np.int64))


@dataclass(frozen=True)
class FitResult:
    """A fitted distribution with goodness-of-fit and bootstrap dispersion.

    count_scale_c is the count-scale normalizer total/Z(q, s, N): the fitted
    expected count at rank r is count_scale_c * (r + q)^(-s).
    r_squared is None when the log-count regression is degenerate; the
    bootstrap fields are None when fewer than two bootstrap refits ran.
    """

    params: MandelbrotParams
    count_scale_c: float
    log_likelihood: float
    r_squared: float | None
    ks_stat: float
    aic: float
    bootstrap_sd_q: float | None
    bootstrap_sd_s: float | None
    bootstrap_cov_qs: float | None
    fit_range: tuple[int, int]
    n_bootstrap: int
    n_params: int
    total_tokens: int
    converged: bool


def _resolve_range(dist: EmpiricalRankDist, fit_range) -> tuple[int, int]:
    lo, hi = (1, dist.n_ranks) if fit_range is None else fit_range
    lo = max(1, int(lo))
    hi = min(dist.n_ranks, int(hi))
    if lo >= hi:
        raise DegenerateInput(
            f"fit range {lo}..{hi} has fewer than 2 ranks (dist has {dist.n_ranks})")
    return lo, hi


def _objective(dist: EmpiricalRankDist, lo: int, hi: int):
    """Per-token negative log-likelihood over the restricted, renormalized range.

    Works on relative frequencies so that scaling every count by the same
    integer leaves the objective, and therefore the fitted parameters,
    bit-identical.
    """
    ranks = np.arange(lo, hi + 1, dtype=np.float64)
    c = dist.counts[lo - 1:hi].astype(np.float64)
    t = c.sum()
    p = c / t

    def nll(q: float, s: float) -> float:
        if q < 0 or s <= 0:
            return np.inf
        logr = np.log(ranks + q)
        x = -s * logr
        m = x.max()
        log_z = m + np.log(np.exp(x - m).sum())
        return float(s * np.dot(p, logr) + log_z)

    return nll, t


def _best_s_at_q0(nll) -> float:
    res = minimize_scalar(lambda s: nll(0.0, s), bounds=_S_BOUNDS,
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def _fit_core(dist: EmpiricalRankDist, lo: int, hi: int,
              zipf: bool) -> tuple[float, float, float, bool]:
    """Maximize the restricted likelihood. Returns (q, s, loglik, converged)."""
    nll, t = _objective(dist, lo, hi)

    if zipf:
        s = _best_s_at_q0(nll)
        return 0.0, s, -nll(0.0, s) * t, True

    best_v, best_qs = np.inf, (0.0, 1.0)
    for q in _Q_GRID:
        for s in _S_GRID:
            v = nll(q, s)
            if v < best_v:
                best_v, best_qs = v, (float(q), float(s))
    res = minimize(lambda x: nll(x[0], x[1]), best_qs, method="Nelder-Mead",
                   bounds=[(0.0, _Q_MAX), _S_BOUNDS],
                   options={"maxfev": _NM_MAXFEV, "xatol": 1e-9, "fatol": 1e-12})
    q, s = float(res.x[0]), float(res.x[1])
    v, converged = float(res.fun), bool(res.status == 0)
    # nesting guard: the q=0 slice must never beat the full fit
    s0 = _best_s_at_q0(nll)
    v0 = nll(0.0, s0)
    if v0 < v:
        q, s, v = 0.0, s0, v0
    return q, s, -v * t, converged


def r_squared_loglog(dist: EmpiricalRankDist, params: MandelbrotParams,
                     fit_range=None, count_scale_c: float | None = None) -> float | None:
    """R-squared of log expected count against log observed count.

    Computed over ranks in the fit range (all observed counts are >= 1 by
    construction). Returns None when all counts in the range are equal, which
    makes the total sum of squares zero.
    """
    lo, hi = _resolve_range(dist, fit_range)
    if count_scale_c is None:
        count_scale_c = dist.total / math.exp(
            _log_normalizer(params.q, params.s, dist.n_ranks))
    ranks = np.arange(lo, hi + 1, dtype=np.float64)
    log_obs = np.log(dist.counts[lo - 1:hi].astype(np.float64))
    log_exp = math.log(count_scale_c) - params.s * np.log(ranks + params.q)
    ss_tot = float(np.sum((log_obs - log_obs.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    ss_res = float(np.sum((log_obs - log_exp) ** 2))
    return 1.0 - ss_res / ss_tot


def ks_stat(dist: EmpiricalRankDist, params: MandelbrotParams, fit_range=None) -> float:
    """Max CDF gap between empirical and model, both renormalized to the range."""
    lo, hi = _resolve_range(dist, fit_range)
    ranks = np.arange(lo, hi + 1, dtype=np.float64)
    emp = np.cumsum(dist.counts[lo - 1:hi].astype(np.float64))
    emp /= emp[-1]
    mod = np.cumsum((ranks + params.q) ** (-params.s))
    mod /= mod[-1]
    return float(np.max(np.abs(emp - mod)))


def _bootstrap_core(dist: EmpiricalRankDist, fit_range, n_iter: int, seed,
                    zipf: bool) -> tuple[float | None, float | None, float | None, int]:
    """Resample-and-refit dispersion. Returns (sd_q, sd_s, cov_qs, n_ok)."""
    p = dist.counts / dist.total
    estimates = []
    failed = 0
    for i in range(n_iter):
        rng = np.random.default_rng([_seed_int(seed), i])
        resampled = rng.multinomial(dist.total, p)
        try:
            boot = EmpiricalRankDist.from_counts(resampled)
            lo, hi = _resolve_range(boot, fit_range)
            q, s, _, _ = _fit_core(boot, lo, hi, zipf)
            estimates.append((q, s))
        except DegenerateInput:
            failed += 1
    if failed > 0.2 * n_iter:
        raise BootstrapFailure(f"{failed}/{n_iter} bootstrap refits failed")
    if len(estimates) < 2:
        return None, None, None, len(estimates)
    arr = np.array(estimates)
    sd = arr.std(axis=0, ddof=1)
    cov = float(np.cov(arr.T, ddof=1)[0, 1])
    return float(sd[0]), float(sd[1]), cov, len(estimates)


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    raise ValueError("bootstrap seed must be an integer")


def bootstrap(dist: EmpiricalRankDist, fit_range=None, n_iter: int = 100,
              seed: int = 0, zipf: bool = False):
    """Token-level bootstrap of the fit: resample total tokens i.i.d. from the
    empirical distribution, refit, and return (sd_q, sd_s, cov_qs).

    Deterministic given seed; per-iteration generators derive from
    (seed, iteration) so results do not depend on execution order. Iterations
    whose refit fails are dropped; more than 20% failures raises
    BootstrapFailure. With fewer than two successful refits the dispersions
    are None.
    """
    _resolve_range(dist, fit_range)
    sd_q, sd_s, cov, _ = _bootstrap_core(dist, fit_range, n_iter, seed, zipf)
    return sd_q, sd_s, cov


def _fit(dist: EmpiricalRankDist, fit_range, n_bootstrap: int, seed: int,
         zipf: bool) -> FitResult:
    lo, hi = _resolve_range(dist, fit_range)
    q, s, ll, converged = _fit_core(dist, lo, hi, zipf)
    params = MandelbrotParams(q=q, s=s, support_size=dist.n_ranks)
    count_scale_c = dist.total / math.exp(params.log_normalizer)
    k = 1 if zipf else 2
    sd_q = sd_s = cov = None
    n_ok = 0
    if n_bootstrap >= 1:
        sd_q, sd_s, cov, n_ok = _bootstrap_core(dist, (lo, hi), n_bootstrap, seed, zipf)
    return FitResult(
        params=params,
        count_scale_c=count_scale_c,
        log_likelihood=ll,
        r_squared=r_squared_loglog(dist, params, (lo, hi), count_scale_c),
        ks_stat=ks_stat(dist, params, (lo, hi)),
        aic=2 * k - 2 * ll,
        bootstrap_sd_q=sd_q,
        bootstrap_sd_s=sd_s,
        bootstrap_cov_qs=cov,
        fit_range=(lo, hi),
        n_bootstrap=n_ok,
        n_params=k,
        total_tokens=dist.total,
        converged=converged,
    )


def fit_mandelbrot(dist: EmpiricalRankDist, fit_range=None,
                   n_bootstrap: int = 0, seed: int = 0) -> FitResult:
    """Two-parameter maximum-likelihood fit of (q, s).

    Non-convergence within the evaluation budget is reported through
    FitResult.converged rather than raised; the best iterate is returned
    either way.
    """
    return _fit(dist, fit_range, n_bootstrap, seed, zipf=False)


def fit_zipf(dist: EmpiricalRankDist, fit_range=None,
             n_bootstrap: int = 0, seed: int = 0) -> FitResult:
    """Restricted fit with q frozen at 0; one free parameter, AIC with k=1."""
    return _fit(dist, fit_range, n_bootstrap, seed, zipf=True)


def delta_aic(mandelbrot: FitResult, zipf: FitResult) -> float:
    """AIC(zipf) - AIC(mandelbrot); positive favors the two-parameter form."""
    if mandelbrot.fit_range != zipf.fit_range:
        raise MismatchedFitRange(
            f"{mandelbrot.fit_range} vs {zipf.fit_range}")
    return zipf.aic - mandelbrot.aic
