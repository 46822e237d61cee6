"""Transitive-inference task: parallel branches of ordered symbols.

Symbol ``(m, i)`` is the ``i``-th symbol (1-indexed) of branch ``m``
(0-indexed). ``(m, i) -> (n, j)`` holds iff ``m == n`` and ``i < j``.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterable, Iterator

Symbol = tuple[int, int]


class EmptyCellError(ValueError):
    pass


@dataclass(frozen=True)
class TIConfig:
    B: int
    D: int
    k: int
    rt_variant: str = "full"
    inverted_negatives: bool = False
    order: str = "ascending"

    def __post_init__(self):
        if self.B < 2 or self.D < 2:
            raise ValueError("need B >= 2 and D >= 2")
        if not 1 <= self.k < self.D:
            raise ValueError("need 1 <= k < D")
        if self.rt_variant not in ("full", "short"):
            raise ValueError(f"unknown rt variant {self.rt_variant!r}")
        if self.order not in ("ascending", "descending"):
            raise ValueError(f"unknown enumeration order {self.order!r}")

    @property
    def n_symbols(self) -> int:
        return self.B * self.D

    @property
    def check_id(self) -> int:
        return self.B * self.D

    @property
    def cross_id(self) -> int:
        return self.B * self.D + 1

    def symbol_id(self, s: Symbol) -> int:
        m, i = s
        return m * self.D + (i - 1)

    def symbol_of(self, sid: int) -> Symbol:
        m, r = divmod(sid, self.D)
        return m, r + 1

    def token(self, label: int) -> int:
        return self.check_id if label > 0 else self.cross_id


@dataclass(frozen=True)
class TIExample:
    first: Symbol
    second: Symbol
    label: int
    phase: str

    @property
    def distance(self) -> int:
        return abs(self.second[1] - self.first[1])


@dataclass(frozen=True)
class TISequence:
    ids: tuple[int, ...]
    target: int


def _in_phase(distance: int, phase: str, k: int) -> bool:
    return distance <= k if phase == "train" else distance > k


def valid_partners(cfg: TIConfig, first: Symbol, label: int, phase: str) -> list[Symbol]:
    m, i = first
    out = []
    for n in range(cfg.B):
        for j in range(1, cfg.D + 1):
            if not _in_phase(abs(j - i), phase, cfg.k):
                continue
            if label > 0:
                ok = n == m and i < j
            elif n != m:
                ok = True
            else:
                ok = cfg.inverted_negatives and j < i
            if ok:
                out.append((n, j))
    return out


def _partner_indices(cfg: TIConfig, i: int, label: int, phase: str) -> tuple[list[int], list[int]]:
    """Admissible partner indices on the same branch and on any other branch."""
    window = [j for j in range(1, cfg.D + 1) if _in_phase(abs(j - i), phase, cfg.k)]
    if label > 0:
        return [j for j in window if j > i], []
    same = [j for j in window if j < i] if cfg.inverted_negatives else []
    return same, window


def sample_example(cfg: TIConfig, label: int, phase: str, seed) -> TIExample:
    """First symbol uniform (among those with a partner), then a uniform partner."""
    if phase not in ("train", "test"):
        raise ValueError(f"unknown phase {phase!r}")
    label = 1 if label > 0 else -1
    if not any(sum(map(len, _partner_indices(cfg, i, label, phase))) for i in range(1, cfg.D + 1)):
        raise EmptyCellError(f"no ({'+' if label > 0 else '-'}, {phase}) pairs exist for {cfg}")
    rng = random.Random(seed)
    while True:
        m = rng.randrange(cfg.B)
        i = rng.randint(1, cfg.D)
        same, other = _partner_indices(cfg, i, label, phase)
        total = len(same) + (cfg.B - 1) * len(other)
        if total:
            break
    pick = rng.randrange(total)
    if pick < len(same):
        second = (m, same[pick])
    else:
        branch_offset, j_index = divmod(pick - len(same), len(other))
        n = branch_offset if branch_offset < m else branch_offset + 1
        second = (n, other[j_index])
    return TIExample((m, i), second, label, phase)


def sample_stream(cfg: TIConfig, count: int, phase: str, seed) -> Iterator[TIExample]:
    """Alternating labels, starting positive; each example has its own seed."""
    for t in range(count):
        yield sample_example(cfg, 1 if t % 2 == 0 else -1, phase, f"ti:{seed}:{phase}:{t}")


def _enumeration(cfg: TIConfig) -> list[int]:
    order = list(range(1, cfg.D + 1))
    return order if cfg.order == "ascending" else order[::-1]


def rt_sequence(ex: TIExample, cfg: TIConfig) -> TISequence:
    """Query pair, then branch ``n`` enumerated without ``x_j``, then the token."""
    n, j = ex.second
    ids = [cfg.symbol_id(ex.first), cfg.symbol_id(ex.second)]
    for r in _enumeration(cfg):
        if r == j:
            continue
        ids.append(cfg.symbol_id((n, r)))
        if cfg.rt_variant == "short" and ex.label > 0 and (n, r) == ex.first:
            break
    ids.append(cfg.token(ex.label))
    return TISequence(tuple(ids), ex.label)


def dp_sequence(ex: TIExample, cfg: TIConfig) -> TISequence:
    return TISequence((cfg.symbol_id(ex.first), cfg.symbol_id(ex.second)), ex.label)


def all_examples(cfg: TIConfig, phase: str) -> Iterator[TIExample]:
    for m, i in itertools.product(range(cfg.B), range(1, cfg.D + 1)):
        for label in (1, -1):
            for second in valid_partners(cfg, (m, i), label, phase):
                yield TIExample((m, i), second, label, phase)


def test_to_train_permutation(ex: TIExample, cfg: TIConfig) -> tuple[int, ...]:
    """Permutation of positions 1..L-1 mapping a test RT sequence onto a
    training one: position 2 swaps with the first enumerated symbol of the
    queried branch whose index is within ``k`` of ``i``.

    Returned as ``perm`` with ``perm[p - 1]`` the source position for ``p``.
    """
    if ex.phase != "test":
        raise ValueError("permutation is defined for test examples")
    if cfg.k < 2:
        raise ValueError("needs training distance k >= 2")
    seq = rt_sequence(ex, TIConfig(cfg.B, cfg.D, cfg.k, "full", cfg.inverted_negatives, cfg.order))
    length = len(seq.ids)
    i = ex.first[1]
    n, j = ex.second
    target = None
    for pos in range(3, length):
        _, r = cfg.symbol_of(seq.ids[pos - 1])
        if abs(r - i) <= cfg.k:
            target = pos
            break
    if target is None:
        raise ValueError(f"no swap target for {ex}")
    perm = list(range(1, length))
    perm[1], perm[target - 1] = target, 2
    return tuple(perm)


def apply_permutation(seq: TISequence, perm: tuple[int, ...]) -> TISequence:
    ids = seq.ids
    body = tuple(ids[perm[p] - 1] for p in range(len(perm)))
    return TISequence(body + ids[len(perm):], seq.target)


@dataclass
class TrainingIndex:
    """Training RT sequences keyed by (multiset of inputs, classification token)."""

    cfg: TIConfig
    keys: set

    @classmethod
    def build(cls, cfg: TIConfig) -> "TrainingIndex":
        full = TIConfig(cfg.B, cfg.D, cfg.k, "full", cfg.inverted_negatives, cfg.order)
        keys = {_multiset_key(rt_sequence(ex, full).ids) for ex in all_examples(cfg, "train")}
        return cls(cfg, keys)

    def is_training_sequence(self, ids: tuple[int, ...]) -> bool:
        """Leading pair within ``k``, positions 2..L-1 enumerate one whole
        branch, and some training sequence uses the same inputs and token."""
        cfg = self.cfg
        if len(ids) != cfg.D + 2 or ids[-1] not in (cfg.check_id, cfg.cross_id):
            return False
        a, b = cfg.symbol_of(ids[0]), cfg.symbol_of(ids[1])
        if abs(a[1] - b[1]) > cfg.k:
            return False
        branch = {cfg.symbol_id((b[0], r)) for r in range(1, cfg.D + 1)}
        if set(ids[1:-1]) != branch or len(ids[1:-1]) != cfg.D:
            return False
        return _multiset_key(ids) in self.keys


def _multiset_key(ids: tuple[int, ...]) -> tuple:
    return tuple(sorted(ids[:-1])), ids[-1]


def export_jsonl(examples: Iterable[TIExample], cfg: TIConfig, variant: str, handle) -> int:
    """Write one JSON line per example; ``variant`` is ``full``, ``short`` or ``dp``."""
    written = 0
    if variant == "dp":
        build = lambda ex: dp_sequence(ex, cfg)  # noqa: E731
    else:
        rt_cfg = TIConfig(cfg.B, cfg.D, cfg.k, variant, cfg.inverted_negatives, cfg.order)
        build = lambda ex: rt_sequence(ex, rt_cfg)  # noqa: E731
    for ex in examples:
        seq = build(ex)
        row = {
            "seq": list(seq.ids),
            "target": seq.target,
            "phase": ex.phase,
            "label": ex.label > 0,
            "B": cfg.B,
            "D": cfg.D,
            "k": cfg.k,
            "variant": variant,
        }
        handle.write(json.dumps(row) + "\n")
        written += 1
    return written
