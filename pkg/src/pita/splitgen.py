"""Statement enumeration and sampling for the Full, Imply, Or and PHP splits.

Every statement has a stable integer coordinate: the same spec and index
always give the same formula, so workers can split index ranges freely.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Union

from .formula import (
    BOT,
    TOP,
    Bin,
    BudgetExceededError,
    Formula,
    Op,
    Var,
    canonicalize,
    right_chain,
)

MAX_ENUMERATION_SIZE = 8


@dataclass(frozen=True)
class FullSpec:
    max_atoms: int = 5
    n_vars: int = 3
    tag = "full"
    connectives = (Op.IMP, Op.OR, Op.AND)


@dataclass(frozen=True)
class ImplySpec:
    max_atoms: int = 7
    n_vars: int = 3
    tag = "imply"
    connectives = (Op.IMP,)


@dataclass(frozen=True)
class OrSpec:
    distractors: tuple[int, int] = (1, 8)
    pool_size: int = 100_000
    tag = "or"

    def __post_init__(self):
        lo, hi = self.distractors
        if not 1 <= lo <= hi:
            raise ValueError(f"distractor range {lo}..{hi} must satisfy 1 <= lo <= hi")


@dataclass(frozen=True)
class PhpSpec:
    """One pigeonhole condition.

    ``holes`` maps each constrained pigeon to its allowed holes and
    ``checks`` lists the (pigeon, pigeon, hole) triples tested for double
    occupancy. Pigeons and holes are 1-indexed.
    """

    pigeons: int
    n_holes: int
    holes: tuple[tuple[int, tuple[int, ...]], ...]
    checks: tuple[tuple[int, int, int], ...]
    tag = "php"

    def __post_init__(self):
        if self.pigeons < 1 or self.n_holes < 1:
            raise ValueError("php needs at least one pigeon and one hole")
        if not self.holes or not self.checks:
            raise ValueError("php hole and check subsets must be nonempty")
        seen = set()
        for pigeon, allowed in self.holes:
            if not 1 <= pigeon <= self.pigeons or pigeon in seen:
                raise ValueError(f"bad pigeon {pigeon}")
            seen.add(pigeon)
            if not allowed or any(not 1 <= j <= self.n_holes for j in allowed):
                raise ValueError(f"bad hole subset for pigeon {pigeon}")
        for i1, i2, j in self.checks:
            if not (1 <= i1 < i2 <= self.pigeons and 1 <= j <= self.n_holes):
                raise ValueError(f"bad check ({i1}, {i2}, {j})")

    @classmethod
    def complete(cls, pigeons: int, n_holes: int) -> "PhpSpec":
        """Classic instance: every pigeon may use every hole, every pair checked."""
        holes = tuple((i, tuple(range(1, n_holes + 1))) for i in range(1, pigeons + 1))
        checks = tuple(
            (i1, i2, j)
            for j in range(1, n_holes + 1)
            for i1, i2 in itertools.combinations(range(1, pigeons + 1), 2)
        )
        return cls(pigeons, n_holes, holes, checks)


SplitSpec = Union[FullSpec, ImplySpec, OrSpec, PhpSpec]


@dataclass(frozen=True)
class StatementRecord:
    formula: Formula
    split: str
    index: int
    size: int
    # Variable pool printed as the declaration line; empty for Or/PHP.
    decls: tuple[str, ...] = field(default=())


def atom_pool(spec: FullSpec | ImplySpec) -> tuple[Formula, ...]:
    return tuple(Var(f"p{k}") for k in range(1, spec.n_vars + 1)) + (TOP, BOT)


def declarations(spec: FullSpec | ImplySpec) -> tuple[str, ...]:
    return tuple(f"p{k}" for k in range(1, spec.n_vars + 1))


# ---------------------------------------------------------------------------
# Tree shapes

Shape = Union[None, tuple]


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


@lru_cache(maxsize=None)
def shapes(leaves: int) -> tuple[Shape, ...]:
    """All binary tree shapes with ``leaves`` leaves, in catalog order.

    ``None`` is a leaf; ``(left, right)`` an internal node. Order: left
    subtree leaf count ascending, then left shape, then right shape.
    """
    if leaves == 1:
        return (None,)
    out = []
    for k in range(1, leaves):
        for left in shapes(k):
            for right in shapes(leaves - k):
                out.append((left, right))
    return tuple(out)


def unrank_shape(leaves: int, rank: int) -> Shape:
    """The ``rank``-th shape of :func:`shapes` without building the catalog."""
    if leaves == 1:
        return None
    for k in range(1, leaves):
        block = catalan(k - 1) * catalan(leaves - k - 1)
        if rank < block:
            left_rank, right_rank = divmod(rank, catalan(leaves - k - 1))
            return (unrank_shape(k, left_rank), unrank_shape(leaves - k, right_rank))
        rank -= block
    raise IndexError("shape rank out of range")


def fill(shape: Shape, ops, atoms) -> Formula:
    """Label a shape: connectives in infix order, atoms left to right."""
    op_iter = iter(ops)
    atom_iter = iter(atoms)

    def go(node: Shape) -> Formula:
        if node is None:
            return next(atom_iter)
        left = go(node[0])
        op = next(op_iter)
        return Bin(op, left, go(node[1]))

    return go(shape)


def fill_chain(shape: Shape, op: Op, items: list[Formula]) -> Formula:
    return fill(shape, itertools.repeat(op), items)


# ---------------------------------------------------------------------------
# Exhaustive splits


def _check_enumerable(spec, max_size: int) -> None:
    if not isinstance(spec, (FullSpec, ImplySpec)):
        raise ValueError(f"split {spec.tag!r} is sampled, not enumerated")
    if max_size > MAX_ENUMERATION_SIZE:
        raise BudgetExceededError(f"max size {max_size} exceeds the enumeration budget of {MAX_ENUMERATION_SIZE}")


def count_of_size(spec: FullSpec | ImplySpec, size: int) -> int:
    c = len(spec.connectives)
    a = spec.n_vars + 2
    return catalan(size - 1) * c ** (size - 1) * a**size


def count_syntactic(spec: FullSpec | ImplySpec, max_size: int) -> int:
    """Closed-form number of syntactic statements with at most ``max_size`` atoms."""
    return sum(count_of_size(spec, s) for s in range(1, max_size + 1))


def enumerate_syntactic(spec: FullSpec | ImplySpec, max_size: int | None = None, start: int = 0,
                        stop: int | None = None) -> Iterator[StatementRecord]:
    """Every syntactic tree up to ``max_size`` atoms in enumeration order.

    ``start``/``stop`` restrict the stream to an index range.
    """
    max_size = spec.max_atoms if max_size is None else max_size
    _check_enumerable(spec, max_size)
    total = count_syntactic(spec, max_size)
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    pool = atom_pool(spec)
    decls = declarations(spec)
    base = 0
    for size in range(1, max_size + 1):
        n = count_of_size(spec, size)
        if base + n <= start:
            base += n
            continue
        if base >= stop:
            return
        all_ops = list(itertools.product(spec.connectives, repeat=size - 1))
        all_atoms = list(itertools.product(pool, repeat=size))
        per_shape = len(all_ops) * len(all_atoms)
        # Skip whole shapes and connective labelings before ``start``.
        offset = max(start - base, 0)
        first_shape, rest = divmod(offset, per_shape)
        first_ops, first_atoms = divmod(rest, len(all_atoms))
        index = base + first_shape * per_shape + first_ops * len(all_atoms)
        for si in range(first_shape, len(shapes(size))):
            shape = shapes(size)[si]
            for oi in range(first_ops if si == first_shape else 0, len(all_ops)):
                ops = all_ops[oi]
                ai0 = first_atoms if (si == first_shape and oi == first_ops) else 0
                index += ai0
                for atoms in all_atoms[ai0:]:
                    if index >= stop:
                        return
                    yield StatementRecord(fill(shape, ops, atoms), spec.tag, index, size, decls)
                    index += 1
        base += n


def statement_at(spec: FullSpec | ImplySpec, index: int, max_size: int | None = None) -> StatementRecord:
    """Random access into :func:`enumerate_syntactic`."""
    max_size = spec.max_atoms if max_size is None else max_size
    _check_enumerable(spec, max_size)
    if index < 0:
        raise IndexError(index)
    rest = index
    for size in range(1, max_size + 1):
        n = count_of_size(spec, size)
        if rest < n:
            break
        rest -= n
    else:
        raise IndexError(f"index {index} out of range")
    pool = atom_pool(spec)
    conns = spec.connectives
    n_atoms = len(pool) ** size
    n_ops = len(conns) ** (size - 1)
    shape_rank, rest = divmod(rest, n_ops * n_atoms)
    op_rank, atom_rank = divmod(rest, n_atoms)
    ops = _digits(op_rank, len(conns), size - 1)
    atoms = _digits(atom_rank, len(pool), size)
    formula = fill(unrank_shape(size, shape_rank), [conns[d] for d in ops], [pool[d] for d in atoms])
    return StatementRecord(formula, spec.tag, index, size, declarations(spec))


def _digits(value: int, base: int, width: int) -> list[int]:
    out = [0] * width
    for pos in range(width - 1, -1, -1):
        value, out[pos] = divmod(value, base)
    return out


def _labelings(size: int, n_vars: int, include_mixed: bool) -> Iterator[tuple[int, ...]]:
    """Atom labelings up to variable renaming.

    Codes ``0..n_vars-1`` are variables in first-occurrence order, ``n_vars``
    is True and ``n_vars + 1`` is False.
    """
    top, bot = n_vars, n_vars + 1

    def go(prefix: list[int], used: int):
        if len(prefix) == size:
            yield tuple(prefix)
            return
        for code in range(min(used + 1, n_vars)):
            prefix.append(code)
            yield from go(prefix, max(used, code + 1))
            prefix.pop()
        for code in (top, bot):
            prefix.append(code)
            yield from go(prefix, used)
            prefix.pop()

    for labels in go([], 0):
        if include_mixed:
            yield labels
        else:
            n_constants = sum(1 for x in labels if x >= n_vars)
            if n_constants in (0, size):
                yield labels


def breadth(spec: FullSpec | ImplySpec, size: int, include_mixed: bool = False) -> int:
    """Number of distinct statements of exactly ``size`` atoms.

    Statements are identified up to variable renaming and AC of \\/ and /\\.
    By default only statements whose atoms are all variables or all
    constants are counted; ``include_mixed`` counts every statement.
    """
    if not isinstance(spec, (FullSpec, ImplySpec)):
        raise ValueError(f"breadth is defined for enumerable splits, not {spec.tag!r}")
    return _breadth(spec.connectives, spec.n_vars, size, include_mixed)


@lru_cache(maxsize=None)
def _breadth(conns: tuple[Op, ...], n_vars: int, size: int, include_mixed: bool) -> int:
    pool = [Var(f"p{k}") for k in range(1, n_vars + 1)] + [TOP, BOT]
    seen = set()
    labelings = list(_labelings(size, n_vars, include_mixed))
    for shape in shapes(size):
        for ops in itertools.product(conns, repeat=size - 1):
            for labels in labelings:
                seen.add(canonicalize(fill(shape, ops, [pool[x] for x in labels])))
    return len(seen)


# ---------------------------------------------------------------------------
# Or split


def sample_or(spec: OrSpec, label: bool, seed, index: int = 0) -> StatementRecord:
    """``v -> (\\/-tree of distinct names)`` with ``v`` in the tree iff ``label``."""
    rng = random.Random(seed)
    lo, hi = spec.distractors
    k = rng.randint(lo, hi)
    if k + 1 > spec.pool_size:
        raise ValueError(f"{k} distractors plus the antecedent exceed the name pool of {spec.pool_size}")
    names = rng.sample(range(1, spec.pool_size + 1), k + 1)
    antecedent = Var(f"p{names[0]}")
    leaves = [Var(f"p{n}") for n in names[1:]]
    if label:
        leaves.insert(rng.randrange(len(leaves) + 1), antecedent)
    shape = unrank_shape(len(leaves), rng.randrange(catalan(len(leaves) - 1)))
    consequent = fill_chain(shape, Op.OR, leaves)
    formula = Bin(Op.IMP, antecedent, consequent)
    return StatementRecord(formula, spec.tag, index, len(leaves) + 1)


def or_record(spec: OrSpec, seed, index: int) -> StatementRecord:
    """Record ``index`` of an Or stream: labels alternate, starting true."""
    return sample_or(spec, index % 2 == 0, f"or:{seed}:{index}", index)


# ---------------------------------------------------------------------------
# PHP split


def _php_parts(spec: PhpSpec):
    clauses = [[Var(f"p{i}{j}") for j in sorted(allowed)] for i, allowed in sorted(spec.holes)]
    checks = sorted(spec.checks, key=lambda t: (t[2], t[0], t[1]))
    pairs = [Bin(Op.AND, Var(f"p{i1}{j}"), Var(f"p{i2}{j}")) for i1, i2, j in checks]
    return clauses, pairs


def _php_radices(spec: PhpSpec) -> list[int]:
    clauses, pairs = _php_parts(spec)
    return [catalan(len(clauses) - 1)] + [catalan(len(c) - 1) for c in clauses] + [catalan(len(pairs) - 1)]


def php_grouping_count(spec: PhpSpec) -> int:
    return math.prod(_php_radices(spec))


def build_php(spec: PhpSpec, grouping_index: int = 0, index: int = 0) -> StatementRecord:
    """The pigeonhole statement for ``spec`` under one parenthetical grouping.

    ``grouping_index`` is a mixed-radix number over the groupings of the
    antecedent conjunction, then each clause, then the consequent.
    """
    radices = _php_radices(spec)
    total = math.prod(radices)
    if not 0 <= grouping_index < total:
        raise IndexError(f"grouping index {grouping_index} out of range 0..{total - 1}")
    digits = []
    rest = grouping_index
    for radix in reversed(radices):
        rest, d = divmod(rest, radix)
        digits.append(d)
    digits.reverse()
    clauses, pairs = _php_parts(spec)
    clause_formulas = [
        fill_chain(unrank_shape(len(c), d), Op.OR, c) for c, d in zip(clauses, digits[1:-1])
    ]
    antecedent = fill_chain(unrank_shape(len(clause_formulas), digits[0]), Op.AND, clause_formulas)
    consequent = fill_chain(unrank_shape(len(pairs), digits[-1]), Op.OR, pairs)
    formula = Bin(Op.IMP, antecedent, consequent)
    size = sum(len(c) for c in clauses) + 2 * len(pairs)
    return StatementRecord(formula, spec.tag, index, size)


def php_forced(spec: PhpSpec) -> bool:
    """Combinatorial truth: every choice of one allowed hole per constrained
    pigeon puts both pigeons of some checked triple into its hole."""
    pigeons = [i for i, _ in sorted(spec.holes)]
    options = [sorted(allowed) for _, allowed in sorted(spec.holes)]
    for selection in itertools.product(*options):
        chosen = dict(zip(pigeons, selection))
        if not any(chosen.get(i1) == j and chosen.get(i2) == j for i1, i2, j in spec.checks):
            return False
    return True


def sample_php_spec(pigeons: int, n_holes: int, rng: random.Random) -> PhpSpec:
    """Uniform nonempty pigeon subset, hole subsets and check subset."""
    if pigeons < 2:
        raise ValueError("sampled php conditions need at least two pigeons to check")
    included = _nonempty_subset(list(range(1, pigeons + 1)), rng)
    holes = tuple((i, tuple(_nonempty_subset(list(range(1, n_holes + 1)), rng))) for i in included)
    triples = [
        (i1, i2, j)
        for j in range(1, n_holes + 1)
        for i1, i2 in itertools.combinations(range(1, pigeons + 1), 2)
    ]
    checks = tuple(_nonempty_subset(triples, rng))
    return PhpSpec(pigeons, n_holes, holes, checks)


def _nonempty_subset(items: list, rng: random.Random) -> list:
    mask = rng.randrange(1, 1 << len(items))
    return [x for k, x in enumerate(items) if mask >> k & 1]


def php_conditions(pigeon_range: tuple[int, int], hole_range: tuple[int, int], count: int,
                   seed) -> list[PhpSpec]:
    rng = random.Random(f"php:{seed}")
    out = []
    for _ in range(count):
        m = rng.randint(*pigeon_range)
        n = rng.randint(*hole_range)
        out.append(sample_php_spec(m, n, rng))
    return out
