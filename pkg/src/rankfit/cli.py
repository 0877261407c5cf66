"""rankfit command-line interface.

Subcommands: build-table, fit, score, calibrate-beta, fingerprint, monitor,
auc, bench. Every subcommand emits JSON (or JSONL) with floats at 17
significant digits.

Exit codes: 0 success; 1 validation error (bad flags or malformed input),
with a machine-readable error object on stderr; 2 I/O error (missing or
unreadable files), same error object shape.

Defaults resolve as flag > config file > built-in. The config file is JSON
and is named either by --config or the RANKFIT_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, fields, replace

import numpy as np

from . import calibration, evaluation, fingerprint, model, monitor, rank_table, scoring
from . import serialization as ser
from .errors import FormatError, RankfitError, ValidationError


@dataclass(frozen=True)
class Config:
    """Built-in defaults, overridable by config file then flags."""

    beta: float = 1.0
    epsilon: float = 1e-6
    score_threshold: float = 4.0  # bits of rank deviation (rank-only mode)
    fingerprint_threshold: float = 3.0  # Mahalanobis distance
    fit_range: str | None = None  # "MIN:MAX"
    bootstrap: int = 100
    seed: int = 0

    @classmethod
    def load(cls, path: str | None) -> "Config":
        cfg = cls()
        if path is None:
            path = os.environ.get("RANKFIT_CONFIG")
        if not path:
            return cfg
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return replace(cfg, **data)


def _pick(flag_value, config_value):
    return config_value if flag_value is None else flag_value


def _parse_fit_range(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError as exc:
        raise ValidationError(f"bad fit range {text!r}, expected MIN:MAX") from exc


def _open_input(path: str):
    if path == "-":
        return sys.stdin
    return open(path, "r", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankfit",
        description="Mandelbrot rank-frequency fitting and black-box output scoring")
    parser.add_argument("--config", help="JSON config file (or set RANKFIT_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-table", help="build a token rank table")
    p.add_argument("--input", nargs="+", required=True, help="token stream files")
    p.add_argument("--output", required=True, help="binary .rkt output path")
    p.add_argument("--per-line-passages", action="store_true",
                   help="each input line is a whitespace-separated passage")
    p.add_argument("--min-count", type=int, default=1,
                   help="drop tokens rarer than this before ranking")
    p.add_argument("--label", default="", help="free-text provenance label")
    p.add_argument("--export-tsv", help="also write token<TAB>rank<TAB>count")

    p = sub.add_parser("fit", help="fit the Mandelbrot ranking distribution")
    p.add_argument("--input", required=True, help="token stream file")
    p.add_argument("--per-line-passages", action="store_true")
    p.add_argument("--zipf", action="store_true", help="restricted fit with q frozen at 0")
    p.add_argument("--fit-range", help="MIN:MAX rank range (default: full)")
    p.add_argument("--bootstrap", type=int, help="bootstrap refit count")
    p.add_argument("--seed", type=int, help="bootstrap seed")
    p.add_argument("--output", required=True, help="fit JSON output path")

    p = sub.add_parser("score", help="score passages against a rank table and fit")
    p.add_argument("--table", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--calibration", help="calibration JSON from calibrate-beta")
    p.add_argument("--domain", help="domain to take beta from the calibration file")
    p.add_argument("--threshold", type=float, help="threshold-proportion cutoff")
    p.add_argument("--entities-only", action="store_true",
                   help="gap-only mode: score only supplied entity spans")
    p.add_argument("--include-tokens", action="store_true",
                   help="emit per-token scores in each record")
    p.add_argument("--input", required=True, help="passages JSONL ('-' for stdin)")
    p.add_argument("--output", required=True, help="scores JSONL ('-' for stdout)")

    p = sub.add_parser("calibrate-beta", help="estimate domain precision beta")
    p.add_argument("--table", required=True)
    p.add_argument("--input", required=True, help="domain corpus token file")
    p.add_argument("--per-line-passages", action="store_true")
    p.add_argument("--domain", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--per-passage-pools", action="store_true",
                   help="local ranks per passage instead of one corpus pool")
    p.add_argument("--output", required=True, help="calibration JSON output path")

    p = sub.add_parser("fingerprint", help="test a fit against reference fingerprints")
    p.add_argument("--fit", required=True, help="observed fit JSON")
    p.add_argument("--references", help="reference JSON (default: bundled set)")
    p.add_argument("--claimed", help="model name to test consistency against")
    p.add_argument("--threshold", type=float)
    p.add_argument("--force", action="store_true",
                   help="emit a verdict even below the minimum token gate")

    p = sub.add_parser("monitor", help="streaming drift detection on passage JSONL")
    p.add_argument("--reference", required=True, help="reference JSON")
    p.add_argument("--model", required=True, help="reference model name")
    p.add_argument("--window", type=int, default=monitor.DEFAULT_WINDOW_TOKENS)
    p.add_argument("--window-unit", choices=("tokens", "passages"),
                   default="tokens", help="what --window counts")
    p.add_argument("--refit-every", type=int, default=monitor.DEFAULT_REFIT_INTERVAL)
    p.add_argument("--threshold", type=float)
    p.add_argument("--input", default="-", help="passages JSONL ('-' for stdin)")

    p = sub.add_parser("auc", help="ROC-AUC over labeled scores")
    p.add_argument("--input", required=True, help="JSONL with score and label fields")
    p.add_argument("--score-field", required=True)
    p.add_argument("--label-field", required=True)

    p = sub.add_parser("bench", help="latency percentiles for the scoring hot path")
    p.add_argument("--table", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--input", required=True, help="passages JSONL")
    p.add_argument("--repetitions", type=int, default=50)

    return parser


def _cmd_build_table(args, cfg: Config) -> int:
    streams = []
    for path in args.input:
        streams.extend(ser.read_token_streams(path, args.per_line_passages))
    table = rank_table.build_table(streams, min_count=args.min_count,
                                   provenance=args.label)
    rank_table.save_table(table, args.output)
    if args.export_tsv:
        rank_table.export_tsv(table, args.export_tsv)
    print(ser.dumps({"vocab_size": table.vocab_size,
                     "total_tokens": table.total_tokens,
                     "output": args.output}))
    return 0


def _cmd_fit(args, cfg: Config) -> int:
    streams = ser.read_token_streams(args.input, args.per_line_passages)
    dist = model.EmpiricalRankDist.from_streams(streams)
    fit_range = _parse_fit_range(_pick(args.fit_range, cfg.fit_range))
    n_boot = _pick(args.bootstrap, cfg.bootstrap)
    seed = _pick(args.seed, cfg.seed)
    fitter = model.fit_zipf if args.zipf else model.fit_mandelbrot
    result = fitter(dist, fit_range=fit_range, n_bootstrap=n_boot, seed=seed)
    ser.save_fit(result, args.output)
    print(ser.dumps(ser.fit_result_to_dict(result)))
    return 0


def _resolve_beta(args, cfg: Config) -> float:
    if args.calibration:
        if not args.domain:
            raise ValidationError("--calibration requires --domain")
        cals = ser.load_calibrations(args.calibration)
        for cal in cals:
            if cal.domain == args.domain:
                return cal.beta_hat
        raise ValidationError(
            f"domain {args.domain!r} not in {args.calibration} "
            f"(has {sorted(c.domain for c in cals)})")
    return _pick(args.beta, cfg.beta)


def _cmd_score(args, cfg: Config) -> int:
    table = rank_table.load_table(args.table)
    fit = ser.load_fit(args.fit)
    beta = _resolve_beta(args, cfg)
    threshold = _pick(args.threshold, cfg.score_threshold)

    def records():
        with _open_input(args.input) as fh:
            for passage in ser.read_passages_jsonl(fh):
                entity_scores = None
                if passage.entities:
                    entity_scores = scoring.score_entities(
                        passage.tokens, passage.entities, table, fit.params,
                        logprobs=passage.logprobs)
                if args.entities_only:
                    record = {"id": passage.id, "mode": scoring.MODE_GAP_ONLY,
                              "scored_token_count": len(passage.tokens)}
                    if entity_scores is not None:
                        record["entity_scores"] = [
                            {"start": e.span.start, "end": e.span.end,
                             "label": e.span.label,
                             "mean_rank_only": e.mean_rank_only,
                             "mean_neg_log_p_ri_global": e.mean_neg_log_p_ri_global,
                             "mean_log_ratio": e.mean_log_ratio}
                            for e in entity_scores]
                    yield record
                    continue
                score = scoring.score_passage(
                    passage.tokens, table, fit.params, logprobs=passage.logprobs,
                    beta=beta, threshold=threshold)
                yield ser.passage_score_to_dict(passage, score, entity_scores,
                                                include_tokens=args.include_tokens)

    if args.output == "-":
        ser.write_jsonl(records(), sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8") as out:
            ser.write_jsonl(records(), out)
    return 0


def _cmd_calibrate_beta(args, cfg: Config) -> int:
    table = rank_table.load_table(args.table)
    streams = ser.read_token_streams(args.input, args.per_line_passages)
    epsilon = _pick(args.epsilon, cfg.epsilon)
    cal = calibration.calibrate_beta(streams, table, epsilon=epsilon,
                                     domain=args.domain,
                                     per_passage_pools=args.per_passage_pools)
    ser.save_calibrations([cal], args.output)
    print(ser.dumps(ser.calibrations_to_list([cal])[0]))
    return 0


def _load_reference_set(path: str | None):
    if path is None:
        return fingerprint.starter_references()
    return fingerprint.load_references(path)


def _cmd_fingerprint(args, cfg: Config) -> int:
    observed = ser.load_fit(args.fit)
    refs = _load_reference_set(args.references)
    threshold = _pick(args.threshold, cfg.fingerprint_threshold)
    out: dict = {"observed": {"q": observed.params.q, "s": observed.params.s,
                              "total_tokens": observed.total_tokens}}
    out["classification"] = [
        {"model_name": name, "mahalanobis_d": d}
        for name, d in fingerprint.classify(observed, refs, force=args.force)]
    if args.claimed:
        matches = [r for r in refs if r.model_name == args.claimed]
        if not matches:
            raise ValidationError(
                f"claimed model {args.claimed!r} not in the reference set "
                f"(has {sorted(r.model_name for r in refs)})")
        verdict = fingerprint.test_consistency(observed, matches[0],
                                               threshold=threshold,
                                               force=args.force)
        out["claimed"] = {"model_name": args.claimed,
                          "z_q": verdict.z_q, "z_s": verdict.z_s,
                          "mahalanobis_d": verdict.mahalanobis_d,
                          "consistent": verdict.consistent,
                          "threshold": verdict.threshold,
                          "covariance_regularized": verdict.covariance_regularized}
    print(ser.dumps(out, indent=2))
    return 0


def _cmd_monitor(args, cfg: Config) -> int:
    refs = _load_reference_set(args.reference)
    matches = [r for r in refs if r.model_name == args.model]
    if not matches:
        raise ValidationError(
            f"model {args.model!r} not in {args.reference} "
            f"(has {sorted(r.model_name for r in refs)})")
    threshold = _pick(args.threshold, cfg.fingerprint_threshold)
    mon = monitor.DriftMonitor(matches[0], window_tokens=args.window,
                               refit_interval=args.refit_every,
                               threshold=threshold,
                               window_unit=args.window_unit)
    with _open_input(args.input) as fh:
        for passage in ser.read_passages_jsonl(fh):
            flag = mon.ingest(passage.tokens)
            if flag is not None:
                sys.stdout.write(ser.dumps({
                    "timestamp": time.time(),
                    "token_count": flag.token_count,
                    "q_hat": flag.q_hat, "s_hat": flag.s_hat,
                    "mahalanobis_d": flag.mahalanobis_d,
                    "threshold": flag.threshold,
                    "degraded": flag.degraded}) + "\n")
                sys.stdout.flush()
    return 0


def _cmd_auc(args, cfg: Config) -> int:
    scores, labels = [], []
    with _open_input(args.input) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if args.score_field not in record or args.label_field not in record:
                raise ValidationError(
                    f"line {lineno}: missing {args.score_field!r} or {args.label_field!r}")
            scores.append(float(record[args.score_field]))
            labels.append(bool(record[args.label_field]))
    auc = evaluation.roc_auc(scores, labels)
    print(ser.dumps({"auc": auc, "n": len(scores),
                     "n_pos": int(sum(labels)), "n_neg": int(len(labels) - sum(labels))}))
    return 0


def _percentiles(values_ms: list[float]) -> dict:
    arr = np.asarray(values_ms)
    return {"p50": float(np.percentile(arr, 50)),
            "p95": float(np.percentile(arr, 95)),
            "p99": float(np.percentile(arr, 99))}


def _cmd_bench(args, cfg: Config) -> int:
    table = rank_table.load_table(args.table)
    fit = ser.load_fit(args.fit)
    with _open_input(args.input) as fh:
        passages = list(ser.read_passages_jsonl(fh))
    if not passages:
        raise ValidationError("no passages to benchmark")
    _ = fit.params.log_normalizer  # one-time setup outside the timed region

    gap_ms: list[float] = []
    full_ms: list[float] = []
    gap_us_per_token: list[float] = []
    full_us_per_token: list[float] = []
    perf = time.perf_counter
    for _rep in range(args.repetitions):
        for p in passages:
            t0 = perf()
            scoring.score_entities(p.tokens, p.entities, table, fit.params,
                                   logprobs=None)
            dt = perf() - t0
            gap_ms.append(dt * 1e3)
            gap_us_per_token.append(dt * 1e6 / max(len(p.tokens), 1))
            t0 = perf()
            scoring.score_passage(p.tokens, table, fit.params,
                                  logprobs=p.logprobs)
            dt = perf() - t0
            full_ms.append(dt * 1e3)
            full_us_per_token.append(dt * 1e6 / max(len(p.tokens), 1))

    print(ser.dumps({
        "passages": len(passages),
        "repetitions": args.repetitions,
        "gap_only": {"per_passage_ms": _percentiles(gap_ms),
                     "per_token_us": _percentiles(gap_us_per_token)},
        "full": {"per_passage_ms": _percentiles(full_ms),
                 "per_token_us": _percentiles(full_us_per_token)},
        "note": "gap-only scores pre-extracted entity spans; no NER runs here, "
                "so full mode measures whole-passage scoring without entity extraction",
    }, indent=2))
    return 0


_COMMANDS = {
    "build-table": _cmd_build_table,
    "fit": _cmd_fit,
    "score": _cmd_score,
    "calibrate-beta": _cmd_calibrate_beta,
    "fingerprint": _cmd_fingerprint,
    "monitor": _cmd_monitor,
    "auc": _cmd_auc,
    "bench": _cmd_bench,
}


def _error_object(exc: Exception) -> str:
    payload = {"type": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "filename", None)
    if path:
        payload["path"] = path
    return json.dumps({"error": payload})


def dispatch(argv) -> int:
    """Parse argv and run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors; usage errors are
        # validation failures under this tool's exit-code contract
        return 0 if exc.code == 0 else 1
    try:
        cfg = Config.load(args.config)
        return _COMMANDS[args.command](args, cfg)
    except (OSError, FormatError) as exc:
        sys.stderr.write(_error_object(exc) + "\n")
        return 2
    except (RankfitError, ValueError) as exc:
        sys.stderr.write(_error_object(exc) + "\n")
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
