"""Focused intuitionistic proof search with Lean-style tactic traces.

The calculus is contraction-free (G4ip style), so search terminates
without loop checks. Invertible steps fire eagerly in a fixed priority;
only disjunctive goals and nested-implication hypotheses branch. The
search tree is built lazily in depth-first order and stops at the first
proof, so the tree doubles as the record of what a DFS explored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Union

from .formula import (
    BOT,
    TOP,
    Bin,
    Bot,
    Formula,
    Op,
    Top,
    is_tautology,
    to_text,
    variables,
)

DEFAULT_BUDGET = 1_000_000

# Hypothesis flags.
LEFT_DONE = 1
RIGHT_DONE = 2
SPENT = 4


class SearchBudgetExceeded(RuntimeError):
    def __init__(self, budget: int):
        super().__init__(f"proof search exceeded its budget of {budget} nodes")
        self.budget = budget


class Status(enum.Enum):
    OPEN = "open"
    PROVED = "proved"
    EXHAUSTED = "exhausted"


class Verdict(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True, slots=True)
class Hyp:
    name: str
    formula: Formula
    flags: int = 0


@dataclass(frozen=True, slots=True)
class Sequent:
    decls: tuple[str, ...]
    hyps: tuple[Hyp, ...]
    goal: Formula
    case: str = ""
    next_name: int = 1
    # Weakening owed inside a nested-implication subproof: (hyp name, D -> B).
    pending: tuple[str, Formula] | None = None

    def fresh(self) -> str:
        return f"h{self.next_name}"


@dataclass(frozen=True, slots=True)
class Tactic:
    kind: str
    args: tuple = ()

    @property
    def text(self) -> str:
        k, a = self.kind, self.args
        if k == "intro":
            return f"intro {a[0]}"
        if k == "apply-or-inl":
            return "apply Or.inl"
        if k == "apply-or-inr":
            return "apply Or.inr"
        if k == "and-intro":
            return "apply And.intro"
        if k == "exact":
            return f"exact {a[0]}"
        if k == "have-left":
            return f"have {a[0]} := {a[1]}.left"
        if k == "have-right":
            return f"have {a[0]} := {a[1]}.right"
        if k == "cases":
            return f"cases {a[0]}"
        if k == "apply-false-elim":
            return f"apply False.elim {a[0]}"
        if k == "apply":
            return f"apply {a[0]}"
        if k == "have-goal":
            return f"have {a[0]} : {to_text(a[1], 'lean')} := by"
        if k == "have-apply":
            return f"have {a[0]} := {a[1]} {a[2]}"
        if k == "have-term":
            return f"have {a[0]} : {to_text(a[1], 'lean')} := {a[2]}"
        raise ValueError(f"unknown tactic kind {k!r}")

    def __str__(self) -> str:
        return self.text


class Branch:
    """One tactic application at a node and the subgoals it produced."""

    __slots__ = ("tactic", "goals", "status")

    def __init__(self, tactic: Tactic):
        self.tactic = tactic
        self.goals: list[SearchNode] = []
        self.status = Status.OPEN


class SearchNode:
    __slots__ = ("sequent", "parent", "tactic", "children", "status")

    def __init__(self, sequent: Sequent, parent: "SearchNode | None" = None, tactic: Tactic | None = None):
        self.sequent = sequent
        self.parent = parent
        self.tactic = tactic
        self.children: list[Branch] = []
        self.status = Status.OPEN

    def __repr__(self) -> str:
        return f"SearchNode({to_text(self.sequent.goal)}, {self.status.value})"


# ---------------------------------------------------------------------------
# Rules


def _sub(case: str, tag: str) -> str:
    return f"{case}.{tag}" if case else tag


def _set_flag(hyps: tuple[Hyp, ...], index: int, flag: int) -> tuple[Hyp, ...]:
    h = hyps[index]
    return hyps[:index] + (replace(h, flags=h.flags | flag),) + hyps[index + 1 :]


def _options(seq: Sequent) -> list[tuple[Tactic, list[Sequent]]]:
    """Applicable tactics in priority order with their premises.

    When an invertible step applies it is the only option.
    """
    goal = seq.goal
    hyps = seq.hyps

    # Closers.
    if isinstance(goal, Top):
        return [(Tactic("exact", ("True.intro",)), [])]
    for h in hyps:
        if h.formula == goal:
            return [(Tactic("exact", (h.name,)), [])]
    for h in hyps:
        if isinstance(h.formula, Bot):
            return [(Tactic("apply-false-elim", (h.name,)), [])]

    if seq.pending is not None:
        src, formula = seq.pending
        new = seq.fresh()
        term = f"fun x => {src} (fun _ => x)"
        premise = replace(seq, hyps=hyps + (Hyp(new, formula),), next_name=seq.next_name + 1, pending=None)
        return [(Tactic("have-term", (new, formula, term)), [premise])]

    if isinstance(goal, Bin) and goal.op is Op.IMP:
        new = seq.fresh()
        premise = replace(seq, hyps=hyps + (Hyp(new, goal.left),), goal=goal.right, next_name=seq.next_name + 1)
        return [(Tactic("intro", (new,)), [premise])]

    if isinstance(goal, Bin) and goal.op is Op.AND:
        return [(
            Tactic("and-intro"),
            [replace(seq, goal=goal.left, case=_sub(seq.case, "left")),
             replace(seq, goal=goal.right, case=_sub(seq.case, "right"))],
        )]

    invertible = _left_invertible(seq)
    if invertible is not None:
        return [invertible]
    return _choices(seq)


def _left_invertible(seq: Sequent) -> tuple[Tactic, list[Sequent]] | None:
    hyps = seq.hyps
    new = seq.fresh()
    step = seq.next_name + 1

    # Split conjunctions, keeping the original hypothesis.
    for k, h in enumerate(hyps):
        f = h.formula
        if isinstance(f, Bin) and f.op is Op.AND:
            if not h.flags & LEFT_DONE:
                hs = _set_flag(hyps, k, LEFT_DONE) + (Hyp(new, f.left),)
                return Tactic("have-left", (new, h.name)), [replace(seq, hyps=hs, next_name=step)]
            if not h.flags & RIGHT_DONE:
                hs = _set_flag(hyps, k, RIGHT_DONE) + (Hyp(new, f.right),)
                return Tactic("have-right", (new, h.name)), [replace(seq, hyps=hs, next_name=step)]

    present = {h.formula for h in hyps}

    # Modus ponens on an implication whose antecedent is available.
    for k, h in enumerate(hyps):
        f = h.formula
        if h.flags & SPENT or not (isinstance(f, Bin) and f.op is Op.IMP):
            continue
        for arg in hyps:
            if arg.formula == f.left:
                hs = _set_flag(hyps, k, SPENT) + (Hyp(new, f.right),)
                return Tactic("have-apply", (new, h.name, arg.name)), [replace(seq, hyps=hs, next_name=step)]

    # True -> B: prove True inline, then modus ponens fires.
    for h in hyps:
        f = h.formula
        if not h.flags & SPENT and isinstance(f, Bin) and f.op is Op.IMP and isinstance(f.left, Top):
            if TOP in present:
                continue
            return Tactic("have-goal", (new, TOP)), [
                replace(seq, goal=TOP, next_name=step, pending=None),
                replace(seq, hyps=hyps + (Hyp(new, TOP),), next_name=step),
            ]

    # Curry a conjunctive antecedent, split a disjunctive one.
    for k, h in enumerate(hyps):
        f = h.formula
        if h.flags & SPENT or not (isinstance(f, Bin) and f.op is Op.IMP and isinstance(f.left, Bin)):
            continue
        a = f.left
        if a.op is Op.AND:
            curried = Bin(Op.IMP, a.left, Bin(Op.IMP, a.right, f.right))
            term = f"fun x y => {h.name} (And.intro x y)"
            hs = _set_flag(hyps, k, SPENT) + (Hyp(new, curried),)
            return Tactic("have-term", (new, curried, term)), [replace(seq, hyps=hs, next_name=step)]
        if a.op is Op.OR:
            if not h.flags & LEFT_DONE:
                part = Bin(Op.IMP, a.left, f.right)
                term = f"fun x => {h.name} (Or.inl x)"
                hs = _set_flag(hyps, k, LEFT_DONE) + (Hyp(new, part),)
            else:
                part = Bin(Op.IMP, a.right, f.right)
                term = f"fun x => {h.name} (Or.inr x)"
                hs = _set_flag(hyps, k, RIGHT_DONE | SPENT) + (Hyp(new, part),)
            return Tactic("have-term", (new, part, term)), [replace(seq, hyps=hs, next_name=step)]

    # Case split on a disjunction; the original hypothesis is consumed.
    for k, h in enumerate(hyps):
        f = h.formula
        if isinstance(f, Bin) and f.op is Op.OR:
            rest = hyps[:k] + hyps[k + 1 :]
            return Tactic("cases", (h.name,)), [
                replace(seq, hyps=rest + (Hyp(new, f.left),), case=_sub(seq.case, "inl"), next_name=step),
                replace(seq, hyps=rest + (Hyp(new, f.right),), case=_sub(seq.case, "inr"), next_name=step),
            ]
    return None


def _choices(seq: Sequent) -> list[tuple[Tactic, list[Sequent]]]:
    goal = seq.goal
    hyps = seq.hyps
    out: list[tuple[Tactic, list[Sequent]]] = []
    if isinstance(goal, Bin) and goal.op is Op.OR:
        out.append((Tactic("apply-or-inl"), [replace(seq, goal=goal.left, case=_sub(seq.case, "h"))]))
        out.append((Tactic("apply-or-inr"), [replace(seq, goal=goal.right, case=_sub(seq.case, "h"))]))
    new = seq.fresh()
    step = seq.next_name + 1
    for k, h in enumerate(hyps):
        f = h.formula
        if h.flags & SPENT or not (isinstance(f, Bin) and f.op is Op.IMP):
            continue
        a = f.left
        if not (isinstance(a, Bin) and a.op is Op.IMP):
            continue
        # (C -> D) -> B: prove C -> D with D -> B available instead of h.
        weakening = (h.name, Bin(Op.IMP, a.right, f.right))
        inner = replace(seq, hyps=_set_flag(hyps, k, SPENT), goal=a, pending=weakening)
        if f.right == goal:
            out.append((Tactic("apply", (h.name,)), [replace(inner, case=_sub(seq.case, "a"))]))
        else:
            out.append((Tactic("have-goal", (new, a)), [
                replace(inner, next_name=step),
                replace(seq, hyps=hyps + (Hyp(new, a),), next_name=step),
            ]))
    return out


# ---------------------------------------------------------------------------
# Search


def initial_sequent(f: Formula, decls: tuple[str, ...] = ()) -> Sequent:
    return Sequent(tuple(decls), (), f)


class _Frame:
    __slots__ = ("node", "options", "next_option", "branch", "premises", "next_premise")

    def __init__(self, node: SearchNode):
        self.node = node
        self.options = None
        self.next_option = 0
        self.branch = None
        self.premises = ()
        self.next_premise = 0


def search(f: Formula, budget: int = DEFAULT_BUDGET, decls: tuple[str, ...] = ()) -> SearchNode:
    """Build the DFS search tree for ``⊢ f``; the root ends proved or exhausted."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    root = SearchNode(initial_sequent(f, decls))
    nodes = 1
    stack = [_Frame(root)]
    result: bool | None = None
    while stack:
        fr = stack[-1]
        node = fr.node
        if result is not None:
            ok, result = result, None
            if ok and fr.next_premise < len(fr.premises):
                child = SearchNode(fr.premises[fr.next_premise], node, fr.branch.tactic)
                fr.next_premise += 1
                fr.branch.goals.append(child)
                nodes += 1
                if nodes > budget:
                    raise SearchBudgetExceeded(budget)
                stack.append(_Frame(child))
                continue
            if ok:
                fr.branch.status = Status.PROVED
                node.status = Status.PROVED
                stack.pop()
                result = True
                continue
            fr.branch.status = Status.EXHAUSTED
        if fr.options is None:
            fr.options = _options(node.sequent)
        if fr.next_option >= len(fr.options):
            node.status = Status.EXHAUSTED
            stack.pop()
            result = False
            continue
        tactic, premises = fr.options[fr.next_option]
        fr.next_option += 1
        branch = Branch(tactic)
        node.children.append(branch)
        if not premises:
            branch.status = Status.PROVED
            node.status = Status.PROVED
            stack.pop()
            result = True
            continue
        fr.branch = branch
        fr.premises = premises
        fr.next_premise = 0
        result = True  # re-enter as if a (vacuous) previous premise succeeded
    return root


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True, slots=True)
class StateEvent:
    id: int
    sequent: Sequent | None  # None marks the <complete /> state


@dataclass(frozen=True, slots=True)
class TacticEvent:
    tactic: Tactic


@dataclass(frozen=True, slots=True)
class BacktrackEvent:
    target: int


Event = Union[StateEvent, TacticEvent, BacktrackEvent]


@dataclass(frozen=True)
class ProofTrace:
    events: tuple[Event, ...]
    verdict: Verdict


def extract_trace(root: SearchNode) -> ProofTrace:
    """Depth-first walk of the explored tree in tactic order.

    A retried node gets a backtrack to its id and is shown again before the
    next tactic; a failed search returns to state 0.
    """
    if root.status is Status.OPEN:
        raise ValueError("search tree is undecided")
    events: list[Event] = []
    ids: dict[int, int] = {}
    counter = 0

    def visit(node: SearchNode) -> None:
        nonlocal counter
        key = id(node)
        if key not in ids:
            ids[key] = counter
            counter += 1
        events.append(StateEvent(ids[key], node.sequent))

    # Frames: [node, pending goals after this node, branch index, goal index]
    stack = [[root, 0, -1, 0]]
    visit(root)
    result: bool | None = None
    while stack:
        fr = stack[-1]
        node, pending = fr[0], fr[1]
        if result is not None:
            ok, result = result, None
            if ok:
                br = node.children[fr[2]]
                if fr[3] < len(br.goals):
                    g = br.goals[fr[3]]
                    below = pending + len(br.goals) - 1 - fr[3]
                    fr[3] += 1
                    visit(g)
                    stack.append([g, below, -1, 0])
                    continue
                stack.pop()
                result = True
                continue
        fr[2] += 1
        if fr[2] >= len(node.children):
            stack.pop()
            result = False
            continue
        if fr[2] > 0:
            events.append(BacktrackEvent(ids[id(node)]))
            events.append(StateEvent(ids[id(node)], node.sequent))
        br = node.children[fr[2]]
        events.append(TacticEvent(br.tactic))
        if not br.goals and br.status is Status.PROVED:
            if pending == 0:
                events.append(StateEvent(counter, None))
                counter += 1
            stack.pop()
            result = True
            continue
        fr[3] = 0
        result = True
    if root.status is Status.PROVED:
        return ProofTrace(tuple(events), Verdict.SUCCESS)
    events.append(BacktrackEvent(0))
    events.append(StateEvent(0, root.sequent))
    return ProofTrace(tuple(events), Verdict.FAILURE)


def classify(trace: ProofTrace) -> Verdict:
    return trace.verdict


def trace_depth(trace: ProofTrace) -> int:
    return max(e.id for e in trace.events if isinstance(e, StateEvent))


def prove(f: Formula, decls: tuple[str, ...] = (), budget: int = DEFAULT_BUDGET) -> ProofTrace:
    return extract_trace(search(f, budget, decls))


# ---------------------------------------------------------------------------
# Classical cross-check


class SoundnessError(AssertionError):
    pass


@dataclass(frozen=True)
class AgreementReport:
    formula: Formula
    prover_verdict: Verdict
    classical_verdict: bool
    discrepancy: bool


def audit_against_oracle(f: Formula, budget: int = DEFAULT_BUDGET) -> AgreementReport:
    """Compare the prover with the truth table.

    A discrepancy is a classical tautology the constructive search cannot
    prove. The reverse would be a soundness bug and raises.
    """
    verdict = extract_trace(search(f, budget)).verdict
    classical = is_tautology(f)
    if verdict is Verdict.SUCCESS and not classical:
        raise SoundnessError(f"prover proved a non-tautology: {to_text(f)}")
    return AgreementReport(f, verdict, classical, verdict is Verdict.FAILURE and classical)


def decide(f: Formula, budget: int = DEFAULT_BUDGET) -> bool:
    return search(f, budget).status is Status.PROVED


__all__ = [
    "AgreementReport",
    "BacktrackEvent",
    "Branch",
    "DEFAULT_BUDGET",
    "Hyp",
    "ProofTrace",
    "SearchBudgetExceeded",
    "SearchNode",
    "Sequent",
    "SoundnessError",
    "StateEvent",
    "Status",
    "Tactic",
    "TacticEvent",
    "Verdict",
    "audit_against_oracle",
    "classify",
    "decide",
    "extract_trace",
    "prove",
    "search",
    "trace_depth",
    "variables",
    "BOT",
]
