"""Token rank tables: build, query, persist.

A rank table maps every token of a reference corpus to its frequency rank
(1 = most frequent) and raw count. It is built once, offline, and then
serves O(1) lookups on the scoring hot path. Tables are immutable after
construction and safe to share across threads.

Tokens are opaque strings; no normalization is applied here (case folding,
whitespace handling and so on belong to whatever tokenizer produced the
stream). Integer token ids are accepted at the API boundary and stored as
their decimal string form.

Ties in count are broken by lexicographic token order so that identical
corpora produce byte-identical tables on every platform.
"""

from __future__ import annotations

import struct
from collections import Counter
from typing import Iterable, Iterator, Sequence

from .errors import EmptyCorpus, FormatError, InvariantViolation

# One token stream = one ordered sequence of token keys.
TokenStream = Sequence[str]

FORMAT_VERSION = 1
_MAGIC = b"RKT1"
_HEADER = struct.Struct("<IQQI")  # version, vocab N, total T, provenance length
_REC_HEAD = struct.Struct("<I")  # key length
_REC_COUNT = struct.Struct("<Q")


def _as_key(token) -> str:
    if isinstance(token, str):
        return token
    if isinstance(token, int):
        if token < 0:
            raise InvariantViolation(f"negative integer token id: {token}")
        return str(token)
    raise InvariantViolation(f"token keys must be str or int, got {type(token).__name__}")


def ranked_counts(counts: dict[str, int]) -> list[tuple[str, int]]:
    """Order (token, count) pairs by descending count, lexicographic tie-break."""
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


class RankTable:
    """Immutable token -> (rank, count) mapping with corpus totals."""

    __slots__ = ("_entries", "_by_rank", "total_tokens", "vocab_size",
                 "provenance", "format_version")

    def __init__(self, by_rank: Sequence[tuple[str, int]], provenance: str = "",
                 format_version: int = FORMAT_VERSION):
        """Construct from (token, count) pairs already in rank order.

        Validates every structural invariant: non-empty unique keys, counts
        positive and non-increasing. Rank is the 1-based position in
        ``by_rank``.
        """
        entries: dict[str, tuple[int, int]] = {}
        prev = None
        for i, (token, count) in enumerate(by_rank):
            if not isinstance(token, str) or not token:
                raise InvariantViolation(f"empty or non-string token at rank {i + 1}")
            if not isinstance(count, int) or count <= 0:
                raise InvariantViolation(f"non-positive count at rank {i + 1}: {count!r}")
            if prev is not None and count > prev:
                raise InvariantViolation(
                    f"counts increase at rank {i + 1}: {count} > {prev}")
            if token in entries:
                raise InvariantViolation(f"duplicate token {token!r}")
            entries[token] = (i + 1, count)
            prev = count
        self._by_rank = tuple(by_rank)
        self._entries = entries
        self.vocab_size = len(entries)
        self.total_tokens = sum(c for _, c in by_rank)
        self.provenance = provenance
        self.format_version = format_version

    @classmethod
    def from_entries(cls, entries: dict[str, tuple[int, int]], provenance: str = "") -> "RankTable":
        """Construct from an explicit token -> (rank, count) mapping.

        The ranks must form exactly the permutation 1..N; gaps, duplicates
        or out-of-range ranks raise InvariantViolation.
        """
        n = len(entries)
        by_rank: list[tuple[str, int] | None] = [None] * n
        for token, (rank, count) in entries.items():
            if not isinstance(rank, int) or rank < 1 or rank > n:
                raise InvariantViolation(f"rank {rank!r} outside 1..{n}")
            if by_rank[rank - 1] is not None:
                raise InvariantViolation(f"duplicate rank {rank}")
            by_rank[rank - 1] = (token, count)
        # a hole here means some rank in 1..N was never assigned
        if any(slot is None for slot in by_rank):
            missing = [i + 1 for i, slot in enumerate(by_rank) if slot is None]
            raise InvariantViolation(f"rank gap: missing ranks {missing[:5]}")
        return cls(by_rank, provenance=provenance)  # type: ignore[arg-type]

    def lookup(self, token) -> tuple[int, int] | None:
        """Return (rank, count) for an in-vocabulary token, else None (OOV)."""
        return self._entries.get(token if isinstance(token, str) else _as_key(token))

    def __contains__(self, token) -> bool:
        return self.lookup(token) is not None

    def __len__(self) -> int:
        return self.vocab_size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RankTable):
            return NotImplemented
        return (self._by_rank == other._by_rank
                and self.provenance == other.provenance
                and self.format_version == other.format_version)

    def __hash__(self):
        return hash((self._by_rank, self.provenance, self.format_version))

    def items_by_rank(self) -> Iterator[tuple[str, int, int]]:
        """Yield (token, rank, count) in rank order."""
        for i, (token, count) in enumerate(self._by_rank):
            yield token, i + 1, count

    def counts_by_rank(self) -> list[int]:
        """Counts in rank order (rank 1 first)."""
        return [c for _, c in self._by_rank]


def build_table(streams: Iterable[TokenStream], min_count: int = 1,
                provenance: str = "") -> RankTable:
    """Count tokens across all streams and rank them by descending frequency.

    min_count drops tokens rarer than the floor before ranking; the default
    of 1 keeps everything. Raises EmptyCorpus when no tokens survive.
    """
    counts: Counter[str] = Counter()
    for stream in streams:
        counts.update(_as_key(t) for t in stream)
    if min_count > 1:
        counts = Counter({t: c for t, c in counts.items() if c >= min_count})
    if not counts:
        raise EmptyCorpus("no tokens in any input stream")
    return RankTable(ranked_counts(counts), provenance=provenance)


def local_ranks(stream: TokenStream) -> dict[str, tuple[int, int]]:
    """Rank tokens by frequency within one stream.

    Same ordering rule as build_table (descending count, lexicographic
    tie-break). An empty stream yields an empty map.
    """
    counts = Counter(_as_key(t) for t in stream)
    return {token: (i + 1, count)
            for i, (token, count) in enumerate(ranked_counts(counts))}


def save_table(table: RankTable, destination) -> None:
    """Write the binary .rkt representation.

    Layout (little-endian): magic "RKT1"; header (version u32, N u64, T u64,
    provenance length u32); provenance bytes; then N records of
    (key length u32, key bytes, count u64) in rank order. Ranks are implicit
    from record position.
    """
    prov = table.provenance.encode("utf-8")
    chunks = [_MAGIC,
              _HEADER.pack(table.format_version, table.vocab_size,
                           table.total_tokens, len(prov)),
              prov]
    for token, _rank, count in table.items_by_rank():
        key = token.encode("utf-8")
        chunks.append(_REC_HEAD.pack(len(key)))
        chunks.append(key)
        chunks.append(_REC_COUNT.pack(count))
    data = b"".join(chunks)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)


def load_table(source) -> RankTable:
    """Read a table written by save_table, revalidating all invariants."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()

    if len(data) < len(_MAGIC) + _HEADER.size:
        raise FormatError("truncated header")
    if data[:4] != _MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}")
    version, n, total, prov_len = _HEADER.unpack_from(data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    pos = 4 + _HEADER.size
    if len(data) < pos + prov_len:
        raise FormatError("truncated provenance")
    provenance = data[pos:pos + prov_len].decode("utf-8")
    pos += prov_len

    by_rank: list[tuple[str, int]] = []
    for _ in range(n):
        if len(data) < pos + _REC_HEAD.size:
            raise FormatError("truncated record header")
        (key_len,) = _REC_HEAD.unpack_from(data, pos)
        pos += _REC_HEAD.size
        if len(data) < pos + key_len + _REC_COUNT.size:
            raise FormatError("truncated record")
        key = data[pos:pos + key_len].decode("utf-8")
        pos += key_len
        (count,) = _REC_COUNT.unpack_from(data, pos)
        pos += _REC_COUNT.size
        by_rank.append((key, count))
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes")

    table = RankTable(by_rank, provenance=provenance, format_version=version)
    if table.total_tokens != total:
        raise InvariantViolation(
            f"count sum {table.total_tokens} != header total {total}")
    return table


def export_tsv(table: RankTable, destination) -> None:
    """Write the human-inspectable token<TAB>rank<TAB>count form."""
    lines = [f"{token}\t{rank}\t{count}\n" for token, rank, count in table.items_by_rank()]
    text = "".join(lines)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
