"""rankfit: Mandelbrot rank-frequency fitting and black-box LLM output scoring.

The package is organized around one offline artifact and three online uses:

- rank_table: build and persist token -> (rank, count) tables from reference
  corpora; O(1) lookups on the scoring hot path.
- model: the two-parameter Mandelbrot ranking distribution, maximum-
  likelihood fitting, goodness of fit, bootstrap dispersions, sampling.
- scoring: single-pass per-token scores (rank deviation, reference
  log-probability, posterior energy), passage and entity aggregation,
  closed-form beta reweighting.
- calibration: per-domain precision (beta) from rank-deviation variance.
- fingerprint: consistency testing and classification of fitted (q, s)
  against named reference fingerprints.
- monitor: streaming drift detection over a rolling token window.
- evaluation: ROC-AUC and Spearman rank correlation.
- cli: the `rankfit` command.
"""

from .calibration import DomainCalibration, calibrate_beta
from .errors import (BadBeta, BootstrapFailure, DegenerateInput,
                     EmptyCandidates, EmptyCorpus, EmptyReferenceSet,
                     FormatError, InsufficientTokens, InvariantViolation,
                     LengthMismatch, MismatchedFitRange, MissingStatistics,
                     MissingUncertainty, RankfitError, RankOutOfSupport,
                     SingleClass, SpanOutOfBounds, UnconvergedFit,
                     ValidationError)
from .evaluation import LabeledScore, roc_auc, spearman_rho
from .fingerprint import (ConsistencyVerdict, FingerprintReference, classify,
                          load_references, sampling_reference,
                          starter_references, test_consistency)
from .model import (EmpiricalRankDist, FitResult, MandelbrotParams, bootstrap,
                    delta_aic, fit_mandelbrot, fit_zipf, ks_stat, log_prob,
                    log_probs, r_squared_loglog, sample_ranks)
from .monitor import (DriftFlag, DriftMonitor, FitSnapshot,
                      calibrate_window_reference)
from .rank_table import (RankTable, TokenStream, build_table, export_tsv,
                         load_table, local_ranks, save_table)
from .scoring import (EntityScore, EntitySpan, PassageScore, TokenScore,
                      posterior_distribution, rank_deviation, reweight,
                      score_entities, score_passage)

__version__ = "0.1.0"

__all__ = [
    "BadBeta", "BootstrapFailure", "ConsistencyVerdict", "DegenerateInput",
    "DomainCalibration", "DriftFlag", "DriftMonitor", "EmpiricalRankDist",
    "EmptyCandidates", "EmptyCorpus", "EmptyReferenceSet", "EntityScore",
    "EntitySpan", "FingerprintReference", "FitResult", "FitSnapshot",
    "FormatError", "InsufficientTokens", "InvariantViolation",
    "LabeledScore", "LengthMismatch", "MandelbrotParams",
    "MismatchedFitRange", "MissingStatistics", "MissingUncertainty",
    "PassageScore", "RankOutOfSupport", "RankTable", "RankfitError",
    "SingleClass", "SpanOutOfBounds", "TokenScore", "TokenStream",
    "UnconvergedFit", "ValidationError", "bootstrap", "build_table",
    "calibrate_beta", "calibrate_window_reference", "classify", "delta_aic",
    "export_tsv", "fit_mandelbrot", "fit_zipf", "ks_stat", "load_references",
    "load_table", "local_ranks", "log_prob", "log_probs",
    "posterior_distribution", "r_squared_loglog", "rank_deviation",
    "reweight", "roc_auc", "sample_ranks", "sampling_reference",
    "save_table", "score_entities", "score_passage", "spearman_rho",
    "starter_references", "test_consistency",
]
