#!/usr/bin/env python3
"""Generate the benchmark layout used by `rankfit bench`.

Writes three artifacts into the output directory: a reference rank table
(table.rkt), its fitted parameters (fit.json), and 213 synthetic passages
across three length bins with entity spans every 32 tokens
(passages.jsonl). Token streams are drawn from the same distribution the
table was built from, so lookups hit a realistic mix of ranks.

Usage:
    python scripts/make_bench_passages.py --out bench/
    rankfit bench --table bench/table.rkt --fit bench/fit.json \
        --input bench/passages.jsonl --repetitions 50
"""

import argparse
import pathlib
import sys

import numpy as np

from rankfit import MandelbrotParams, RankTable, sample_ranks, save_table
from rankfit.model import EmpiricalRankDist, fit_mandelbrot
from rankfit.serialization import dumps, save_fit

LENGTH_BINS = (256, 512, 1024)
PASSAGES_PER_BIN = 71


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("bench"))
    ap.add_argument("--support", type=int, default=20_000)
    ap.add_argument("--table-tokens", type=int, default=400_000)
    ap.add_argument("--seed", type=int, default=55)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    params = MandelbrotParams(2.5, 1.0, args.support)
    draws = sample_ranks(params, args.table_tokens, args.seed)
    counts = np.bincount(draws, minlength=args.support + 1)[1:]
    by_rank = sorted(((f"t{r:06d}", int(c))
                      for r, c in enumerate(counts, start=1) if c > 0),
                     key=lambda kv: (-kv[1], kv[0]))
    table = RankTable(by_rank, provenance="synthetic benchmark table")
    save_table(table, args.out / "table.rkt")

    fit = fit_mandelbrot(EmpiricalRankDist.from_table(table),
                         fit_range=(1, 1000), n_bootstrap=50, seed=args.seed)
    save_fit(fit, args.out / "fit.json")

    rng = np.random.default_rng(args.seed + 1)
    with open(args.out / "passages.jsonl", "w", encoding="utf-8") as fh:
        pid = 0
        for n in LENGTH_BINS:
            stream = sample_ranks(params, n * PASSAGES_PER_BIN, rng)
            tokens = [f"t{r:06d}" for r in stream]
            for i in range(PASSAGES_PER_BIN):
                toks = tokens[i * n:(i + 1) * n]
                spans = [{"start": j, "end": j + 2, "label": "PERSON"}
                         for j in range(0, n - 2, 32)]
                fh.write(dumps({"id": f"bench-{pid:04d}", "tokens": toks,
                                "entities": spans}) + "\n")
                pid += 1
    total = PASSAGES_PER_BIN * len(LENGTH_BINS)
    print(f"wrote {total} passages, table ({table.vocab_size} types, "
          f"{table.total_tokens} tokens), and fit to {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
