"""Single-pass token and passage scoring against a reference rank table.

Per token the scorer computes the rank deviation (bits), the reference
log-probability under a fitted Mandelbrot distribution, and, when model
log-probabilities are supplied, the model-reference log-ratio and the
precision-weighted posterior energy

    energy = -log P_model - beta * log P_reference.

Unit conventions, fixed here to avoid silent mix-ups: rank deviation is
log base 2 (bits); every probability log is natural.

Passage scores cache two sufficient statistics, the mean log rank deviation
and the mean negative reference log-probability, so the posterior aggregate
can be recomputed in closed form at any new beta (reweight) without touching
the tokens again.

Out-of-vocabulary policy: an OOV token gets global rank N+1 (N = table
vocabulary size) for rank deviation, and its reference log-probability is
evaluated at the support edge, keeping every score finite while preserving
maximal-rarity ordering.

Scoring is read-only over the table and fit parameters; passages can be
scored concurrently without coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (BadBeta, EmptyCandidates, LengthMismatch,
                     MissingStatistics, SpanOutOfBounds)
from .model import MandelbrotParams
from .rank_table import RankTable, local_ranks

# floor (in bits) applied to rank deviations before taking their log for the
# cached statistic; deviations are <= 0 for locally under-prominent tokens
CLAMP_EPSILON_BITS = 2.0 ** -20

MODE_HYBRID = "hybrid"
MODE_RANK_ONLY = "rank_only"
MODE_GAP_ONLY = "gap_only"

ENTITY_LABELS = ("PERSON", "ORG", "GPE", "LOC", "DATE", "QUANTITY", "OTHER")


def rank_deviation(global_rank: int, local_rank: int) -> float:
    """log2(global_rank / local_rank), in bits. Both ranks must be >= 1."""
    return math.log2(global_rank / local_rank)


@dataclass(frozen=True, slots=True)
class TokenScore:
    token: str
    global_rank: int  # table vocab size + 1 when OOV
    local_rank: int
    rank_deviation: float  # bits
    log_p_ri: float  # natural log, reference probability at the global rank
    log_p_llm: float | None = None
    log_ratio: float | None = None  # log_p_llm - log_p_ri
    posterior_energy: float | None = None  # -log_p_llm - beta * log_p_ri


@dataclass(frozen=True, slots=True)
class EntitySpan:
    start: int
    end: int  # exclusive
    label: str = "OTHER"

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise SpanOutOfBounds(f"bad span [{self.start}, {self.end})")
        if self.label not in ENTITY_LABELS:
            raise ValueError(f"unknown entity label {self.label!r}")


@dataclass(frozen=True, slots=True)
class EntityScore:
    span: EntitySpan
    mean_rank_only: float  # mean rank deviation over span tokens, bits
    mean_neg_log_p_ri_global: float
    mean_log_ratio: float | None = None


@dataclass(frozen=True, slots=True)
class PassageScore:
    """Per-token scores plus aggregates and cached sufficient statistics.

    mean_log_rank_deviation averages ln(max(rank_deviation, 2^-20 bits));
    clamped_token_count reports how many tokens hit that floor. Aggregates
    are over the per-token score of the active mode (posterior energy in
    hybrid mode, rank deviation in rank-only mode) and are None for an
    empty passage.
    """

    token_scores: tuple[TokenScore, ...]
    mean_log_rank_deviation: float | None
    mean_neg_log_p_ri: float | None
    posterior_aggregate: float | None
    aggregate_mean: float | None
    aggregate_max: float | None
    aggregate_threshold_proportion: float | None
    beta_used: float
    threshold_used: float
    mode: str
    clamped_token_count: int

    @property
    def scored_token_count(self) -> int:
        return len(self.token_scores)


def posterior_aggregate_at(mean_log_rank_deviation: float,
                           mean_neg_log_p_ri: float, beta: float) -> float:
    """Closed-form posterior aggregate from the two cached statistics."""
    return -mean_log_rank_deviation + (1.0 + beta) * mean_neg_log_p_ri


def score_passage(tokens: Sequence[str], table: RankTable,
                  ri_fit: MandelbrotParams,
                  logprobs: Sequence[float] | None = None,
                  beta: float = 1.0, threshold: float = 4.0,
                  weights: Sequence[float] | None = None) -> PassageScore:
    """Score one passage in a single pass.

    Runs in O(len(tokens)) with no dependence on the reference corpus size.
    With logprobs present (one natural-log probability per token) the mode
    is hybrid and aggregates run over posterior energies; without them the
    mode is rank-only and aggregates run over rank deviations in bits.
    `weights` optionally reweights every mean-type statistic (default
    uniform); max and threshold-proportion aggregates are unweighted.
    """
    if beta <= 0 or not math.isfinite(beta):
        raise BadBeta(f"beta must be positive, got {beta}")
    n = len(tokens)
    if logprobs is not None and len(logprobs) != n:
        raise LengthMismatch(f"{len(logprobs)} logprobs for {n} tokens")
    if weights is not None and len(weights) != n:
        raise LengthMismatch(f"{len(weights)} weights for {n} tokens")

    hybrid = logprobs is not None
    mode = MODE_HYBRID if hybrid else MODE_RANK_ONLY
    if n == 0:
        return PassageScore(token_scores=(), mean_log_rank_deviation=None,
                            mean_neg_log_p_ri=None, posterior_aggregate=None,
                            aggregate_mean=None, aggregate_max=None,
                            aggregate_threshold_proportion=None,
                            beta_used=beta, threshold_used=threshold,
                            mode=mode, clamped_token_count=0)

    local = local_ranks(tokens)
    oov_rank = table.vocab_size + 1
    s, q = ri_fit.s, ri_fit.q
    log_z = ri_fit.log_normalizer
    support = ri_fit.support_size
    log, log2 = math.log, math.log2

    scores: list[TokenScore] = []
    sum_w = 0.0
    sum_log_dev = 0.0
    sum_neg_lpr = 0.0
    sum_score = 0.0
    max_score = -math.inf
    above = 0
    clamped = 0

    for i, token in enumerate(tokens):
        hit = table.lookup(token)
        gr = hit[0] if hit is not None else oov_rank
        lr = local[token][0]
        dev = log2(gr / lr)
        lpr = -s * log(min(gr, support) + q) - log_z
        w = 1.0 if weights is None else float(weights[i])

        if hybrid:
            lpl = float(logprobs[i])
            ratio = lpl - lpr
            energy = -lpl - beta * lpr
            scores.append(TokenScore(token, gr, lr, dev, lpr, lpl, ratio, energy))
            per_token = energy
        else:
            scores.append(TokenScore(token, gr, lr, dev, lpr))
            per_token = dev

        if dev < CLAMP_EPSILON_BITS:
            clamped += 1
            sum_log_dev += w * log(CLAMP_EPSILON_BITS)
        else:
            sum_log_dev += w * log(dev)
        sum_neg_lpr += w * -lpr
        sum_score += w * per_token
        sum_w += w
        if per_token > max_score:
            max_score = per_token
        if per_token > threshold:
            above += 1

    mean_log_dev = sum_log_dev / sum_w
    mean_neg_lpr = sum_neg_lpr / sum_w
    return PassageScore(
        token_scores=tuple(scores),
        mean_log_rank_deviation=mean_log_dev,
        mean_neg_log_p_ri=mean_neg_lpr,
        posterior_aggregate=posterior_aggregate_at(mean_log_dev, mean_neg_lpr, beta),
        aggregate_mean=sum_score / sum_w,
        aggregate_max=max_score,
        aggregate_threshold_proportion=above / n,
        beta_used=beta,
        threshold_used=threshold,
        mode=mode,
        clamped_token_count=clamped,
    )


def reweight(score: PassageScore, new_beta: float) -> float:
    """Recompute the posterior aggregate at a new beta from cached statistics.

    Exact: no re-tokenization, no model call. Matches a full rescore at the
    same beta to floating-point roundoff.
    """
    if new_beta <= 0 or not math.isfinite(new_beta):
        raise BadBeta(f"beta must be positive, got {new_beta}")
    if score.mean_log_rank_deviation is None or score.mean_neg_log_p_ri is None:
        raise MissingStatistics("passage has no scored tokens")
    return posterior_aggregate_at(score.mean_log_rank_deviation,
                                  score.mean_neg_log_p_ri, new_beta)


def score_entities(tokens: Sequence[str], spans: Sequence[EntitySpan],
                   table: RankTable, ri_fit: MandelbrotParams,
                   logprobs: Sequence[float] | None = None) -> list[EntityScore]:
    """Score pre-extracted entity spans; tokens outside all spans cost nothing.

    This is the latency-critical gap-only path: one frequency pass over the
    passage, then per-token quantities only at span positions. Means are
    arithmetic over each span's tokens. Raises SpanOutOfBounds for spans
    that do not fit the passage.
    """
    n = len(tokens)
    if logprobs is not None and len(logprobs) != n:
        raise LengthMismatch(f"{len(logprobs)} logprobs for {n} tokens")
    for span in spans:
        if span.end > n:
            raise SpanOutOfBounds(f"span [{span.start}, {span.end}) in {n}-token passage")
    if not spans:
        return []

    local = local_ranks(tokens)
    oov_rank = table.vocab_size + 1
    s, q = ri_fit.s, ri_fit.q
    log_z = ri_fit.log_normalizer
    support = ri_fit.support_size
    log, log2 = math.log, math.log2

    out: list[EntityScore] = []
    for span in spans:
        width = span.end - span.start
        sum_dev = 0.0
        sum_neg_lpr = 0.0
        sum_ratio = 0.0
        for i in range(span.start, span.end):
            token = tokens[i]
            hit = table.lookup(token)
            gr = hit[0] if hit is not None else oov_rank
            lr = local[token][0]
            lpr = -s * log(min(gr, support) + q) - log_z
            sum_dev += log2(gr / lr)
            sum_neg_lpr += -lpr
            if logprobs is not None:
                sum_ratio += float(logprobs[i]) - lpr
        out.append(EntityScore(
            span=span,
            mean_rank_only=sum_dev / width,
            mean_neg_log_p_ri_global=sum_neg_lpr / width,
            mean_log_ratio=(sum_ratio / width) if logprobs is not None else None,
        ))
    return out


def posterior_distribution(log_p_llm: Sequence[float], log_p_ri: Sequence[float],
                           beta: float) -> np.ndarray:
    """Renormalized product-of-experts posterior over candidate tokens.

    exp(log_p_llm + beta * log_p_ri), normalized to sum to one; computed in
    log space with max subtraction so widely separated magnitudes stay
    stable. beta = 0 returns the renormalized model distribution unchanged.
    """
    a = np.asarray(log_p_llm, dtype=np.float64)
    b = np.asarray(log_p_ri, dtype=np.float64)
    if a.size == 0:
        raise EmptyCandidates("no candidates")
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("log-probabilities must be finite")
    logits = a + beta * b
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()
