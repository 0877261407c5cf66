"""JSON/JSONL serialization for every file format the CLI speaks.

All floats are written with 17 significant digits so that serialized
numbers round-trip bit-exactly and golden-file tests can compare output
text directly. None maps to JSON null (the undefined-value marker for
aggregates, dispersions and R-squared).
"""

from __future__ import annotations

import json
import json.encoder
from dataclasses import asdict, dataclass
from typing import Iterable, Iterator, Sequence, TextIO

from .calibration import DomainCalibration
from .errors import ValidationError
from .fingerprint import FingerprintReference
from .model import FitResult, MandelbrotParams
from .scoring import EntityScore, EntitySpan, PassageScore


class _Float17Encoder(json.JSONEncoder):
    """JSON encoder that renders every float with %.17g."""

    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None
        return json.encoder._make_iterencode(
            markers, self.default, json.encoder.encode_basestring_ascii,
            self.indent, lambda f: format(f, ".17g"),
            self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot=False)(o, 0)


def dumps(obj, indent: int | None = None) -> str:
    return json.dumps(obj, cls=_Float17Encoder, indent=indent, sort_keys=False)


def dump_json(obj, path, indent: int | None = 2) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj, indent=indent))
        fh.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# --- fit results -----------------------------------------------------------

def fit_result_to_dict(result: FitResult) -> dict:
    """Flat snake_case dict with every FitResult field."""
    return {
        "q": result.params.q,
        "s": result.params.s,
        "support_size": result.params.support_size,
        "count_scale_c": result.count_scale_c,
        "log_likelihood": result.log_likelihood,
        "r_squared": result.r_squared,
        "ks_stat": result.ks_stat,
        "aic": result.aic,
        "bootstrap_sd_q": result.bootstrap_sd_q,
        "bootstrap_sd_s": result.bootstrap_sd_s,
        "bootstrap_cov_qs": result.bootstrap_cov_qs,
        "fit_range": list(result.fit_range),
        "n_bootstrap": result.n_bootstrap,
        "n_params": result.n_params,
        "total_tokens": result.total_tokens,
        "converged": result.converged,
    }


def fit_result_from_dict(d: dict) -> FitResult:
    try:
        return FitResult(
            params=MandelbrotParams(q=d["q"], s=d["s"],
                                    support_size=d["support_size"]),
            count_scale_c=d["count_scale_c"],
            log_likelihood=d["log_likelihood"],
            r_squared=d["r_squared"],
            ks_stat=d["ks_stat"],
            aic=d["aic"],
            bootstrap_sd_q=d["bootstrap_sd_q"],
            bootstrap_sd_s=d["bootstrap_sd_s"],
            bootstrap_cov_qs=d["bootstrap_cov_qs"],
            fit_range=tuple(d["fit_range"]),
            n_bootstrap=d["n_bootstrap"],
            n_params=d["n_params"],
            total_tokens=d["total_tokens"],
            converged=d["converged"],
        )
    except KeyError as exc:
        raise ValidationError(f"fit JSON missing field {exc}") from exc


def save_fit(result: FitResult, path) -> None:
    dump_json(fit_result_to_dict(result), path)


def load_fit(path) -> FitResult:
    return fit_result_from_dict(load_json(path))


# --- calibration records ----------------------------------------------------

def calibrations_to_list(cals: Sequence[DomainCalibration]) -> list[dict]:
    return [asdict(c) for c in cals]


def calibrations_from_list(records) -> list[DomainCalibration]:
    try:
        return [DomainCalibration(**r) for r in records]
    except TypeError as exc:
        raise ValidationError(f"bad calibration record: {exc}") from exc


def save_calibrations(cals: Sequence[DomainCalibration], path) -> None:
    dump_json(calibrations_to_list(cals), path)


def load_calibrations(path) -> list[DomainCalibration]:
    return calibrations_from_list(load_json(path))


def save_references(refs: Sequence[FingerprintReference], path) -> None:
    dump_json([asdict(r) for r in refs], path)


# --- passages (scoring input) -----------------------------------------------

@dataclass(frozen=True)
class Passage:
    """One JSONL input record for scoring."""

    id: str
    tokens: tuple[str, ...]
    logprobs: tuple[float, ...] | None = None
    entities: tuple[EntitySpan, ...] = ()


def passage_from_dict(d: dict) -> Passage:
    if "tokens" not in d:
        raise ValidationError("passage record has no tokens field")
    tokens = d["tokens"]
    if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
        raise ValidationError("tokens must be a list of strings")
    logprobs = d.get("logprobs")
    if logprobs is not None:
        if not isinstance(logprobs, list) or len(logprobs) != len(tokens):
            raise ValidationError("logprobs must be a list matching tokens")
        logprobs = tuple(float(x) for x in logprobs)
    entities = []
    for e in d.get("entities") or ():
        try:
            entities.append(EntitySpan(start=int(e["start"]), end=int(e["end"]),
                                       label=e.get("label", "OTHER")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad entity span {e!r}: {exc}") from exc
    return Passage(id=str(d.get("id", "")), tokens=tuple(tokens),
                   logprobs=logprobs, entities=tuple(entities))


def read_passages_jsonl(fh: TextIO) -> Iterator[Passage]:
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: invalid JSON: {exc}") from exc
        yield passage_from_dict(record)


def passage_score_to_dict(passage: Passage, score: PassageScore,
                          entity_scores: Sequence[EntityScore] | None = None,
                          include_tokens: bool = False) -> dict:
    out = {
        "id": passage.id,
        "mode": score.mode,
        "beta_used": score.beta_used,
        "threshold_used": score.threshold_used,
        "scored_token_count": score.scored_token_count,
        "clamped_token_count": score.clamped_token_count,
        "mean_log_rank_deviation": score.mean_log_rank_deviation,
        "mean_neg_log_p_ri": score.mean_neg_log_p_ri,
        "posterior_aggregate": score.posterior_aggregate,
        "aggregate_mean": score.aggregate_mean,
        "aggregate_max": score.aggregate_max,
        "aggregate_threshold_proportion": score.aggregate_threshold_proportion,
    }
    if include_tokens:
        out["token_scores"] = [
            {"token": t.token, "global_rank": t.global_rank,
             "local_rank": t.local_rank, "rank_deviation": t.rank_deviation,
             "log_p_ri": t.log_p_ri, "log_p_llm": t.log_p_llm,
             "log_ratio": t.log_ratio, "posterior_energy": t.posterior_energy}
            for t in score.token_scores]
    if entity_scores is not None:
        out["entity_scores"] = [
            {"start": e.span.start, "end": e.span.end, "label": e.span.label,
             "mean_rank_only": e.mean_rank_only,
             "mean_neg_log_p_ri_global": e.mean_neg_log_p_ri_global,
             "mean_log_ratio": e.mean_log_ratio}
            for e in entity_scores]
    return out


def write_jsonl(records: Iterable[dict], fh: TextIO) -> None:
    for record in records:
        fh.write(dumps(record))
        fh.write("\n")


# --- token stream files -----------------------------------------------------

def read_token_streams(path, per_line_passages: bool = False) -> list[list[str]]:
    """Read newline-delimited token input.

    Default: one token per line, the whole file forming one stream. With
    per_line_passages each line is a whitespace-separated passage and
    becomes its own stream. Blank lines are skipped in both modes.
    """
    with open(path, "r", encoding="utf-8") as fh:
        if per_line_passages:
            return [line.split() for line in fh if line.strip()]
        return [[line.strip() for line in fh if line.strip()]]
