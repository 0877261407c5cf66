"""Shared fixtures: small hand tables and synthetic corpora."""

import numpy as np
import pytest

from rankfit import MandelbrotParams, RankTable, build_table, sample_ranks
from rankfit.model import EmpiricalRankDist


@pytest.fixture
def tiny_table() -> RankTable:
    # a:(1,3) b:(2,2) c:(3,1), T=6, N=3
    return build_table([["a", "b", "a", "c", "a", "b"]])


def table_from_params(params: MandelbrotParams, n_tokens: int, seed) -> RankTable:
    """Reference table whose token keys are rank-tagged strings."""
    draws = sample_ranks(params, n_tokens, seed)
    counts = np.bincount(draws, minlength=params.support_size + 1)[1:]
    tokens = [(f"t{rank:06d}", int(c)) for rank, c in enumerate(counts, start=1) if c > 0]
    tokens.sort(key=lambda kv: (-kv[1], kv[0]))
    return RankTable(tokens, provenance="synthetic")


def tokens_from_ranks(draws) -> list[str]:
    return [f"t{r:06d}" for r in draws]


@pytest.fixture(scope="session")
def ref_params() -> MandelbrotParams:
    return MandelbrotParams(q=2.5, s=1.0, support_size=5000)


@pytest.fixture(scope="session")
def ref_table(ref_params) -> RankTable:
    return table_from_params(ref_params, 200_000, seed=101)


@pytest.fixture(scope="session")
def ref_dist(ref_table) -> EmpiricalRankDist:
    return EmpiricalRankDist.from_table(ref_table)
