"""Streaming drift detection over a rolling token window.

The monitor keeps a bounded FIFO of the most recent tokens, refits the
Mandelbrot parameters every refit_interval ingested tokens (once the window
is at least half full), and raises a drift flag whenever the window fit is
inconsistent with a reference fingerprint at the configured threshold.

No bootstrap runs on the hot path: the reference's dispersions carry all
the uncertainty, so they must describe the spread of window-sized fits.
calibrate_window_reference builds such a reference from a fitted model by
refitting synthetic windows; its default dispersion_scale of 2.0 widens the
band so that a threshold-3 monitor stays quiet on in-distribution traffic
(a 2-D distance at an exactly-calibrated band exceeds 3 about once per
hundred refits, which is far too chatty for an alerting path).

Single-writer: one stream of ingest calls mutates the monitor. history
returns an immutable snapshot and may be read concurrently.
"""

from __future__ import annotations

import time
from collections import Counter, deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInput
from .fingerprint import FingerprintReference, parameter_distance
from .model import (EmpiricalRankDist, MandelbrotParams, fit_mandelbrot,
                    sample_ranks)

DEFAULT_WINDOW_TOKENS = 50_000
DEFAULT_REFIT_INTERVAL = 5_000
MIN_WINDOW_TOKENS = 10_000


@dataclass(frozen=True)
class FitSnapshot:
    """One refit outcome appended to the monitor history."""

    timestamp: float  # wall clock, seconds
    token_count: int  # total tokens ingested when the refit ran
    q_hat: float | None
    s_hat: float | None
    mahalanobis_d: float | None
    flagged: bool
    degraded: bool = False  # window could not be fitted


@dataclass(frozen=True)
class DriftFlag:
    token_count: int
    q_hat: float | None
    s_hat: float | None
    mahalanobis_d: float | None
    threshold: float
    degraded: bool = False


class DriftMonitor:
    """Rolling-window (q, s) estimator compared against a reference band.

    window_unit selects what the window counts: "tokens" (default) keeps the
    last window_tokens tokens, "passages" keeps the last window_tokens whole
    passages regardless of their lengths. refit_interval is always measured
    in ingested tokens.
    """

    def __init__(self, reference: FingerprintReference,
                 window_tokens: int = DEFAULT_WINDOW_TOKENS,
                 refit_interval: int = DEFAULT_REFIT_INTERVAL,
                 threshold: float = 3.0, fit_range=None,
                 window_unit: str = "tokens"):
        if window_unit not in ("tokens", "passages"):
            raise ValueError(f"window_unit must be tokens or passages, got {window_unit!r}")
        if window_unit == "tokens" and window_tokens < MIN_WINDOW_TOKENS:
            raise ValueError(
                f"window of {window_tokens} tokens is below the minimum "
                f"{MIN_WINDOW_TOKENS}; fits on smaller windows are too loose")
        if refit_interval < 1:
            raise ValueError("refit_interval must be positive")
        self.reference = reference
        self.window_tokens = window_tokens
        self.refit_interval = refit_interval
        self.threshold = threshold
        self.fit_range = fit_range
        self.window_unit = window_unit
        if window_unit == "tokens":
            self._window: deque[str] = deque(maxlen=window_tokens)
        else:
            self._passages: deque[tuple[str, ...]] = deque(maxlen=window_tokens)
        self._total_ingested = 0
        self._next_refit_at = refit_interval
        self._history: list[FitSnapshot] = []

    @property
    def total_ingested(self) -> int:
        return self._total_ingested

    @property
    def history(self) -> tuple[FitSnapshot, ...]:
        return tuple(self._history)

    def window_size(self) -> int:
        if self.window_unit == "tokens":
            return len(self._window)
        return sum(len(p) for p in self._passages)

    def _window_counts(self) -> Counter:
        if self.window_unit == "tokens":
            return Counter(self._window)
        c: Counter = Counter()
        for p in self._passages:
            c.update(p)
        return c

    def ingest(self, passage: Sequence[str]) -> DriftFlag | None:
        """Append a passage; refit and test on refit boundaries.

        Refits run after the whole passage is absorbed: one refit per ingest
        call even when a long passage crosses several boundaries (the
        boundary counter still advances past all of them). Fit failures
        degrade to a flagged snapshot instead of raising.
        """
        if len(passage) == 0:
            return None
        if self.window_unit == "tokens":
            self._window.extend(passage)
        else:
            self._passages.append(tuple(passage))
        self._total_ingested += len(passage)

        if self._total_ingested < self._next_refit_at:
            return None
        while self._next_refit_at <= self._total_ingested:
            self._next_refit_at += self.refit_interval
        half_full = (self.window_unit == "tokens"
                     and len(self._window) * 2 >= self.window_tokens) or \
                    (self.window_unit == "passages"
                     and len(self._passages) * 2 >= self.window_tokens)
        if not half_full:
            return None
        return self._refit()

    def _refit(self) -> DriftFlag | None:
        now = time.time()
        try:
            dist = EmpiricalRankDist.from_counts(self._window_counts().values())
            fit = fit_mandelbrot(dist, fit_range=self.fit_range)
            if not fit.converged:
                raise DegenerateInput("window fit did not converge")
        except DegenerateInput:
            snap = FitSnapshot(timestamp=now, token_count=self._total_ingested,
                               q_hat=None, s_hat=None, mahalanobis_d=None,
                               flagged=True, degraded=True)
            self._history.append(snap)
            return DriftFlag(token_count=snap.token_count, q_hat=None,
                             s_hat=None, mahalanobis_d=None,
                             threshold=self.threshold, degraded=True)
        _, _, d, _ = parameter_distance(fit.params.q, fit.params.s, self.reference)
        flagged = d > self.threshold
        self._history.append(FitSnapshot(
            timestamp=now, token_count=self._total_ingested,
            q_hat=fit.params.q, s_hat=fit.params.s,
            mahalanobis_d=d, flagged=flagged))
        if flagged:
            return DriftFlag(token_count=self._total_ingested,
                             q_hat=fit.params.q, s_hat=fit.params.s,
                             mahalanobis_d=d, threshold=self.threshold)
        return None


def calibrate_window_reference(model_name: str, params: MandelbrotParams,
                               window_tokens: int, n_fits: int = 20,
                               seed: int = 0, dispersion_scale: float = 2.0,
                               fit_range=None) -> FingerprintReference:
    """Reference band matched to window-sized fits of a known distribution.

    The monitor tests fits of anywhere between half and a full window of
    tokens, and the estimator's finite-sample center moves with that size,
    so the band pools refits of synthetic draws at both scales: n_fits at
    window_tokens plus n_fits at half that. The pooled covariance therefore
    covers both the per-scale noise and the shift of center between scales;
    dispersion_scale widens it further for quiet alerting.
    """
    estimates = []
    for size_index, n_tokens in enumerate((window_tokens, window_tokens // 2)):
        for k in range(n_fits):
            draws = sample_ranks(params, n_tokens, [seed, size_index, k])
            fit = fit_mandelbrot(EmpiricalRankDist.from_rank_draws(draws),
                                 fit_range=fit_range)
            estimates.append((fit.params.q, fit.params.s))
    arr = np.array(estimates)
    cov = np.cov(arr.T, ddof=1) * dispersion_scale ** 2
    return FingerprintReference(
        model_name=model_name,
        q_ref=float(arr[:, 0].mean()), s_ref=float(arr[:, 1].mean()),
        sd_q=float(np.sqrt(cov[0, 0])), sd_s=float(np.sqrt(cov[1, 1])),
        cov_qs=float(cov[0, 1]),
        notes=f"window band: {n_fits} refits each of {window_tokens}- and "
              f"{window_tokens // 2}-token draws, dispersion x{dispersion_scale}")
