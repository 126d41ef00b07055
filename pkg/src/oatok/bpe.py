"""Byte-pair encoding over integer symbol streams.

Token ids for base symbols are the symbols themselves (non-negative ints);
merged tokens get fresh ids above the largest existing id. Pair counts are
taken at every adjacent position within a stream, never across streams, and
frequency ties break toward the lexicographically smallest (left, right)
id pair so training is deterministic.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, OutOfAlphabetError, OutOfVocabularyError

Stream = list[int]


@dataclass(frozen=True)
class MergeRule:
    left: int
    right: int
    new_id: int


@dataclass
class BpeVocab:
    base_alphabet: frozenset[int]
    merges: list[MergeRule]
    token_table: dict[int, tuple[int, ...]] = field(repr=False)
    target_size: int

    def __len__(self) -> int:
        return len(self.base_alphabet) + len(self.merges)

    @property
    def token_ids(self) -> list[int]:
        return sorted(self.token_table)

    def expansion_length(self, token_id: int) -> int:
        if token_id not in self.token_table:
            raise OutOfVocabularyError(f"unknown token id {token_id}")
        return len(self.token_table[token_id])


def _merge_pass(stream: Stream, left: int, right: int, new_id: int) -> Stream:
    """Replace (left, right) occurrences left-to-right, non-overlapping."""
    out: Stream = []
    i = 0
    n = len(stream)
    while i < n:
        if i + 1 < n and stream[i] == left and stream[i + 1] == right:
            out.append(new_id)
            i += 2
        else:
            out.append(stream[i])
            i += 1
    return out


def bpe_train(corpus: list[Stream], target_size: int) -> BpeVocab:
    """Greedy most-frequent-pair merging until target_size or no pair repeats."""
    if not corpus or all(len(s) == 0 for s in corpus):
        raise ConfigError("BPE training corpus is empty")
    alphabet = frozenset(sym for stream in corpus for sym in stream)
    if any(sym < 0 for sym in alphabet):
        raise ConfigError("BPE symbols must be non-negative integers")
    if target_size < len(alphabet):
        raise ConfigError(
            f"target_size {target_size} smaller than base alphabet ({len(alphabet)})"
        )

    token_table: dict[int, tuple[int, ...]] = {sym: (sym,) for sym in alphabet}
    merges: list[MergeRule] = []
    streams = [list(s) for s in corpus]
    next_id = max(alphabet) + 1

    while len(alphabet) + len(merges) < target_size:
        counts: Counter[tuple[int, int]] = Counter()
        for s in streams:
            counts.update(zip(s, s[1:]))
        if not counts:
            break
        best_count = max(counts.values())
        if best_count < 2:
            break
        left, right = min(p for p, c in counts.items() if c == best_count)
        rule = MergeRule(left=left, right=right, new_id=next_id)
        merges.append(rule)
        token_table[next_id] = token_table[left] + token_table[right]
        streams = [
            _merge_pass(s, left, right, next_id) if _contains_pair(s, left, right) else s
            for s in streams
        ]
        next_id += 1

    return BpeVocab(
        base_alphabet=alphabet,
        merges=merges,
        token_table=token_table,
        target_size=target_size,
    )


def _contains_pair(stream: Stream, left: int, right: int) -> bool:
    return any(a == left and b == right for a, b in zip(stream, stream[1:]))


def bpe_encode(vocab: BpeVocab, stream: Stream) -> list[int]:
    """Apply merges in creation order; expand(encode(s)) == s exactly."""
    for sym in stream:
        if sym not in vocab.base_alphabet:
            raise OutOfAlphabetError(f"symbol {sym} not in base alphabet")
    seq = list(stream)
    ranks = {(m.left, m.right): (i, m.new_id) for i, m in enumerate(vocab.merges)}
    # Repeatedly apply the earliest-created rule whose pair is present. A merge
    # never creates sites for earlier rules, so this equals one in-order pass
    # per rule while skipping rules whose pair never occurs.
    while len(seq) > 1:
        present = [(ranks[p], p) for p in set(zip(seq, seq[1:])) if p in ranks]
        if not present:
            break
        (_, new_id), (left, right) = min(present)
        seq = _merge_pass(seq, left, right, new_id)
    return seq


def bpe_decode(vocab: BpeVocab, token_ids: list[int]) -> Stream:
    """Concatenate expansions; total over every id in the vocabulary."""
    out: Stream = []
    for tid in token_ids:
        if tid not in vocab.token_table:
            raise OutOfVocabularyError(f"unknown token id {tid}")
        out.extend(vocab.token_table[tid])
    return out


def vocab_to_dict(vocab: BpeVocab) -> dict:
    return {
        "base_alphabet": sorted(vocab.base_alphabet),
        "merges": [[m.left, m.right, m.new_id] for m in vocab.merges],
        "target_size": vocab.target_size,
    }


def vocab_from_dict(payload: dict) -> BpeVocab:
    alphabet = frozenset(payload["base_alphabet"])
    token_table: dict[int, tuple[int, ...]] = {sym: (sym,) for sym in alphabet}
    merges = []
    for left, right, new_id in payload["merges"]:
        merges.append(MergeRule(left=left, right=right, new_id=new_id))
        token_table[new_id] = token_table[left] + token_table[right]
    return BpeVocab(
        base_alphabet=alphabet,
        merges=merges,
        token_table=token_table,
        target_size=payload["target_size"],
    )


def save_vocab(vocab: BpeVocab, path: str | Path) -> None:
    Path(path).write_text(json.dumps(vocab_to_dict(vocab), sort_keys=True) + "\n")


def load_vocab(path: str | Path) -> BpeVocab:
    return vocab_from_dict(json.loads(Path(path).read_text()))
