"""Propositional formulas over {variable, True, False} joined by ->, \\/, /\\.

Formulas are immutable binary trees. The surface syntax follows Lean 4:
all three connectives are right-associative and bind as /\\ > \\/ > ->.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

MAX_TAUTOLOGY_VARS = 24
MAX_CANONICAL_ATOMS = 12
# Upper bound on variable bijections tried by canonicalize after symmetry pruning.
MAX_CANONICAL_BIJECTIONS = 200_000


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnboundVariableError(KeyError):
    pass


class BudgetExceededError(ValueError):
    pass


class Op(enum.Enum):
    IMP = "→"
    OR = "∨"
    AND = "∧"

    @property
    def precedence(self) -> int:
        return _PRECEDENCE[self]

    @property
    def ascii(self) -> str:
        return _ASCII[self]


_PRECEDENCE = {Op.IMP: 1, Op.OR: 2, Op.AND: 3}
_ASCII = {Op.IMP: "->", Op.OR: "\\/", Op.AND: "/\\"}


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Top:
    def __str__(self) -> str:
        return "⊤"


@dataclass(frozen=True, slots=True)
class Bot:
    def __str__(self) -> str:
        return "⊥"


@dataclass(frozen=True, slots=True)
class Bin:
    op: Op
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return to_text(self)


Formula = Union[Var, Top, Bot, Bin]
Assignment = Mapping[str, bool]

TOP = Top()
BOT = Bot()


def imp(a: Formula, b: Formula) -> Bin:
    return Bin(Op.IMP, a, b)


def disj(a: Formula, b: Formula) -> Bin:
    return Bin(Op.OR, a, b)


def conj(a: Formula, b: Formula) -> Bin:
    return Bin(Op.AND, a, b)


def right_chain(op: Op, items: list[Formula]) -> Formula:
    """Fold ``items`` into a right-nested chain ``a op (b op (c ...))``."""
    if not items:
        raise ValueError("empty chain")
    out = items[-1]
    for item in reversed(items[:-1]):
        out = Bin(op, item, out)
    return out


def is_atom(f: Formula) -> bool:
    return not isinstance(f, Bin)


# ---------------------------------------------------------------------------
# Printing


def atom_text(f: Formula, style: str = "unicode") -> str:
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Top):
        return "⊤" if style == "unicode" else "True"
    return "⊥" if style == "unicode" else "False"


def to_text(f: Formula, style: str = "unicode") -> str:
    """Render with the minimum parentheses needed to parse back.

    ``style`` is ``"unicode"`` (⊤/⊥), ``"lean"`` (True/False) or ``"ascii"``.
    """
    parts: list[str] = []
    _emit(f, style, parts)
    return "".join(parts)


def _emit(f: Formula, style: str, out: list[str]) -> None:
    if not isinstance(f, Bin):
        out.append(atom_text(f, style))
        return
    p = f.op.precedence
    left, right = f.left, f.right
    # Right-associative: a same-precedence left child needs parentheses.
    lp = isinstance(left, Bin) and left.op.precedence <= p
    rp = isinstance(right, Bin) and right.op.precedence < p
    if lp:
        out.append("(")
    _emit(left, style, out)
    if lp:
        out.append(")")
    out.append(f" {f.op.ascii if style == 'ascii' else f.op.value} ")
    if rp:
        out.append("(")
    _emit(right, style, out)
    if rp:
        out.append(")")


# ---------------------------------------------------------------------------
# Parsing

_SYMBOLS = (
    ("->", "IMP"),
    ("→", "IMP"),
    ("\\/", "OR"),
    ("∨", "OR"),
    ("/\\", "AND"),
    ("∧", "AND"),
    ("(", "LP"),
    (")", "RP"),
    ("⊤", "TOP"),
    ("⊥", "BOT"),
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        for sym, kind in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append((kind, sym, i))
                i += len(sym)
                break
        else:
            if ch.isalpha() or ch == "_":
                j = i + 1
                while j < n and (text[j].isalnum() or text[j] in "_'"):
                    j += 1
                word = text[i:j]
                kind = {"True": "TOP", "False": "BOT"}.get(word, "VAR")
                tokens.append((kind, word, i))
                i = j
            else:
                raise FormulaSyntaxError(f"unexpected character {ch!r}", _byte_offset(text, i))
    tokens.append(("EOF", "", n))
    return tokens


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def fail(self, message: str):
        _, value, index = self.tokens[self.pos]
        found = repr(value) if value else "end of input"
        raise FormulaSyntaxError(f"{message}, found {found}", _byte_offset(self.text, index))

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek() != "EOF":
            self.fail("expected end of input")
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "IMP":
            self.pos += 1
            return Bin(Op.IMP, left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        if self.peek() == "OR":
            self.pos += 1
            return Bin(Op.OR, left, self.disjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.atom()
        if self.peek() == "AND":
            self.pos += 1
            return Bin(Op.AND, left, self.conjunction())
        return left

    def atom(self) -> Formula:
        kind, value, _ = self.tokens[self.pos]
        if kind == "LP":
            self.pos += 1
            inner = self.implication()
            if self.peek() != "RP":
                self.fail("expected ')'")
            self.pos += 1
            return inner
        if kind == "TOP":
            self.pos += 1
            return TOP
        if kind == "BOT":
            self.pos += 1
            return BOT
        if kind == "VAR":
            self.pos += 1
            return Var(value)
        self.fail("expected an atom or '('")


def parse(text: str) -> Formula:
    """Parse a formula; raises :class:`FormulaSyntaxError` with a byte offset."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Structure


def atom_count(f: Formula) -> int:
    if isinstance(f, Bin):
        return atom_count(f.left) + atom_count(f.right)
    return 1


def variables(f: Formula) -> tuple[str, ...]:
    """Variable names in order of first (left-to-right) occurrence."""
    seen: dict[str, None] = {}
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Bin):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Var):
            seen.setdefault(node.name)
    return tuple(seen)


def rename(f: Formula, mapping: Mapping[str, str]) -> Formula:
    if isinstance(f, Var):
        return Var(mapping.get(f.name, f.name))
    if isinstance(f, Bin):
        return Bin(f.op, rename(f.left, mapping), rename(f.right, mapping))
    return f


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Bin):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


# ---------------------------------------------------------------------------
# Classical semantics


def evaluate(f: Formula, assignment: Assignment) -> bool:
    if isinstance(f, Var):
        try:
            return bool(assignment[f.name])
        except KeyError:
            raise UnboundVariableError(f.name) from None
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    a = evaluate(f.left, assignment)
    b = evaluate(f.right, assignment)
    if f.op is Op.AND:
        return a and b
    if f.op is Op.OR:
        return a or b
    return (not a) or b


def truth_table(f: Formula) -> tuple[tuple[str, ...], int]:
    """Evaluate ``f`` on every assignment at once.

    Returns the variable order and an integer whose bit ``t`` is the value of
    ``f`` under assignment ``t`` (bit ``k`` of ``t`` is the value of variable ``k``).
    """
    names = variables(f)
    v = len(names)
    if v > MAX_TAUTOLOGY_VARS:
        raise BudgetExceededError(f"{v} variables exceed the truth-table budget of {MAX_TAUTOLOGY_VARS}")
    rows = 1 << v
    full = (1 << rows) - 1
    columns = {}
    for k, name in enumerate(names):
        width = 1 << (k + 1)
        block = ((1 << (1 << k)) - 1) << (1 << k)
        columns[name] = block * (full // ((1 << width) - 1))

    def go(node: Formula) -> int:
        if isinstance(node, Var):
            return columns[node.name]
        if isinstance(node, Top):
            return full
        if isinstance(node, Bot):
            return 0
        a = go(node.left)
        b = go(node.right)
        if node.op is Op.AND:
            return a & b
        if node.op is Op.OR:
            return a | b
        return (full ^ a) | b

    return names, go(f)


def is_tautology(f: Formula) -> bool:
    names, table = truth_table(f)
    return table == (1 << (1 << len(names))) - 1


def assignments(names: tuple[str, ...]) -> Iterator[dict[str, bool]]:
    for values in itertools.product((True, False), repeat=len(names)):
        yield dict(zip(names, values))


# ---------------------------------------------------------------------------
# Canonical forms modulo variable renaming and AC of \/ and /\

_AC_OPS = (Op.OR, Op.AND)
_NF_SYMBOL = {Op.IMP: ">", Op.OR: "|", Op.AND: "&"}


def flatten(f: Formula, op: Op) -> list[Formula]:
    """Operands of the maximal ``op``-chain rooted at ``f``."""
    if isinstance(f, Bin) and f.op is op:
        return flatten(f.left, op) + flatten(f.right, op)
    return [f]


def _nf(f: Formula, names: Mapping[str, str] | None) -> str:
    """AC-normal serialization: chains flattened, operands sorted.

    With ``names=None`` every variable serializes as ``x`` (shape only).
    """
    if isinstance(f, Var):
        return "x" if names is None else names[f.name]
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Bot):
        return "F"
    if f.op is Op.IMP:
        return f">({_nf(f.left, names)},{_nf(f.right, names)})"
    parts = sorted(_nf(c, names) for c in flatten(f, f.op))
    return f"{_NF_SYMBOL[f.op]}({','.join(parts)})"


def _variable_signatures(f: Formula) -> dict[str, tuple]:
    """Renaming- and AC-invariant description of where each variable occurs."""
    paths: dict[str, list[tuple]] = {}

    def walk(node: Formula, path: tuple) -> None:
        if isinstance(node, Var):
            paths.setdefault(node.name, []).append(path)
        elif isinstance(node, Bin):
            if node.op is Op.IMP:
                walk(node.left, path + ("L",))
                walk(node.right, path + ("R",))
            else:
                for child in flatten(node, node.op):
                    walk(child, path + (_NF_SYMBOL[node.op] + _nf(child, None),))

    walk(f, ())
    return {name: tuple(sorted(ps)) for name, ps in paths.items()}


def _symmetric_classes(f: Formula, block: list[str]) -> list[list[str]]:
    """Partition ``block`` into sets of variables freely interchangeable in ``f``.

    Two variables are joined when swapping them maps ``f`` to an AC-equal
    formula; classes closed under such transpositions are fully symmetric.
    """
    identity = {v: v for v in variables(f)}
    base = _nf(f, identity)
    parent = {v: v for v in block}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in itertools.combinations(block, 2):
        if find(a) == find(b):
            continue
        swapped = dict(identity)
        swapped[a], swapped[b] = b, a
        if _nf(f, swapped) == base:
            parent[find(b)] = find(a)
    classes: dict[str, list[str]] = {}
    for v in block:
        classes.setdefault(find(v), []).append(v)
    return list(classes.values())


def _block_orderings(f: Formula, block: list[str]) -> list[tuple[str, ...]]:
    classes = _symmetric_classes(f, block)
    rank = {}
    for cls in classes:
        for position, v in enumerate(cls):
            rank[v] = (id(cls), position)
    out = []
    for perm in itertools.permutations(block):
        last: dict[int, int] = {}
        ok = True
        for v in perm:
            cid, position = rank[v]
            if last.get(cid, -1) > position:
                ok = False
                break
            last[cid] = position
        if ok:
            out.append(perm)
    return out


def canonicalize(f: Formula) -> bytes:
    """Canonical byte string: equal iff the formulas agree up to a variable
    bijection and reordering/reassociation of \\/- and /\\-chains."""
    n_atoms = atom_count(f)
    if n_atoms > MAX_CANONICAL_ATOMS:
        raise BudgetExceededError(f"{n_atoms} atoms exceed the canonicalization budget of {MAX_CANONICAL_ATOMS}")
    names = variables(f)
    if not names:
        return _nf(f, {}).encode()
    signatures = _variable_signatures(f)
    ordered = sorted(names, key=lambda v: signatures[v])
    blocks = [list(g) for _, g in itertools.groupby(ordered, key=lambda v: signatures[v])]
    per_block = [_block_orderings(f, block) for block in blocks]
    total = 1
    for options in per_block:
        total *= len(options)
    if total > MAX_CANONICAL_BIJECTIONS:
        raise BudgetExceededError(f"{total} candidate variable bijections exceed {MAX_CANONICAL_BIJECTIONS}")
    best = None
    for choice in itertools.product(*per_block):
        order = [v for block in choice for v in block]
        candidate = _nf(f, {v: f"x{i}" for i, v in enumerate(order)})
        if best is None or candidate < best:
            best = candidate
    return best.encode()


def canonical_formula(f: Formula, prefix: str = "p") -> Formula:
    """A representative formula of ``f``'s class, decoded from its canonical form."""
    text = canonicalize(f).decode()
    pos = 0

    def read() -> Formula:
        nonlocal pos
        ch = text[pos]
        if ch == "T":
            pos += 1
            return TOP
        if ch == "F":
            pos += 1
            return BOT
        if ch == "x":
            j = pos + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            index = int(text[pos + 1 : j])
            pos = j
            return Var(f"{prefix}{index + 1}")
        op = {">": Op.IMP, "|": Op.OR, "&": Op.AND}[ch]
        pos += 2  # symbol and "("
        items = [read()]
        while text[pos] == ",":
            pos += 1
            items.append(read())
        pos += 1  # ")"
        return right_chain(op, items)

    return read()
