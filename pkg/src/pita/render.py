"""XML documents, prompt/completion records, shard files and topology stats.

Documents carry one element per line with no indentation::

    <state id="0">
    <if>p1 p2 p3 : Prop</if>
    <then>⊢ p1 → p1</then>
    </state>
    <tactic>intro h1</tactic>
    ...
    <success />
"""

from __future__ import annotations

import gzip as gzip_module
import hashlib
import json
import os
import random
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Union

from .formula import to_text
from .prover import (
    BacktrackEvent,
    ProofTrace,
    Sequent,
    StateEvent,
    TacticEvent,
    Verdict,
    extract_trace,
    search,
    trace_depth,
)
from .splitgen import StatementRecord

SEPARATOR = "||"
MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "pita-shards/1"
RECORD_FIELDS = (
    "id", "split", "statement", "prompt", "completion_rt", "completion_dp",
    "label", "depth", "size", "doc_chars",
)


class DocumentSchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Document model


@dataclass(frozen=True)
class StateElement:
    id: int
    lines: tuple[str, ...] = ()  # contents of the <if> lines
    goal: str | None = None      # contents of <then>; None for <complete />

    @property
    def complete(self) -> bool:
        return self.goal is None


@dataclass(frozen=True)
class TacticElement:
    text: str


@dataclass(frozen=True)
class BacktrackElement:
    target: int


@dataclass(frozen=True)
class VerdictElement:
    success: bool


Element = Union[StateElement, TacticElement, BacktrackElement, VerdictElement]


@dataclass(frozen=True)
class Document:
    elements: tuple[Element, ...]

    @property
    def text(self) -> str:
        return "\n".join(_element_lines(self.elements))

    @property
    def success(self) -> bool:
        return self.elements[-1].success

    @property
    def max_id(self) -> int:
        return max(e.id for e in self.elements if isinstance(e, StateElement))

    def __str__(self) -> str:
        return self.text


def _element_lines(elements: Iterable[Element]) -> Iterator[str]:
    for e in elements:
        if isinstance(e, StateElement):
            yield f'<state id="{e.id}">'
            if e.goal is None:
                yield "<complete />"
            else:
                for line in e.lines:
                    yield f"<if>{line}</if>"
                yield f"<then>{e.goal}</then>"
            yield "</state>"
        elif isinstance(e, TacticElement):
            yield f"<tactic>{e.text}</tactic>"
        elif isinstance(e, BacktrackElement):
            yield f'<backtrack to="{e.target}" />'
        else:
            yield "<success />" if e.success else "<failure />"


def sequent_lines(seq: Sequent) -> tuple[tuple[str, ...], str]:
    """``<if>`` lines and ``<then>`` text for a sequent.

    Consecutive hypotheses with identical formulas share a line, as Lean
    prints them (``h3 h4 : p1``).
    """
    lines = []
    if seq.case:
        lines.append(f"case {seq.case}")
    if seq.decls:
        lines.append(" ".join(seq.decls) + " : Prop")
    group: list[str] = []
    current = None
    for h in seq.hyps:
        if group and h.formula == current:
            group.append(h.name)
            continue
        if group:
            lines.append(f"{' '.join(group)} : {to_text(current, 'lean')}")
        group, current = [h.name], h.formula
    if group:
        lines.append(f"{' '.join(group)} : {to_text(current, 'lean')}")
    return tuple(lines), "⊢ " + to_text(seq.goal, "lean")


def render_document(trace: ProofTrace) -> Document:
    elements: list[Element] = []
    for event in trace.events:
        if isinstance(event, StateEvent):
            if event.sequent is None:
                elements.append(StateElement(event.id))
            else:
                lines, goal = sequent_lines(event.sequent)
                elements.append(StateElement(event.id, lines, goal))
        elif isinstance(event, TacticEvent):
            elements.append(TacticElement(event.tactic.text))
        else:
            elements.append(BacktrackElement(event.target))
    elements.append(VerdictElement(trace.verdict is Verdict.SUCCESS))
    return Document(tuple(elements))


_STATE_OPEN = re.compile(r'<state id="(0|[1-9][0-9]*)">')
_BACKTRACK = re.compile(r'<backtrack to="(0|[1-9][0-9]*)" />')
_IF = re.compile(r"<if>(.*)</if>")
_THEN = re.compile(r"<then>(.*)</then>")
_TACTIC = re.compile(r"<tactic>(.*)</tactic>")


def parse_document(text: str) -> Document:
    """Parse and validate a document; errors name the offending element."""
    lines = text.split("\n")
    elements: list[Element] = []
    pos = 0

    def where() -> str:
        return f"/element[{len(elements)}](line {pos + 1})"

    while pos < len(lines):
        line = lines[pos]
        m = _STATE_OPEN.fullmatch(line)
        if m:
            sid = int(m.group(1))
            pos += 1
            if pos < len(lines) and lines[pos] == "<complete />":
                pos += 1
                element = StateElement(sid)
            else:
                body = []
                while pos < len(lines) and (mi := _IF.fullmatch(lines[pos])):
                    body.append(mi.group(1))
                    pos += 1
                mt = _THEN.fullmatch(lines[pos]) if pos < len(lines) else None
                if not mt:
                    raise DocumentSchemaError(where(), f"state {sid} lacks a <then> goal")
                pos += 1
                element = StateElement(sid, tuple(body), mt.group(1))
            if pos >= len(lines) or lines[pos] != "</state>":
                raise DocumentSchemaError(where(), f"state {sid} is not closed")
            pos += 1
            elements.append(element)
            continue
        if m := _TACTIC.fullmatch(line):
            elements.append(TacticElement(m.group(1)))
        elif m := _BACKTRACK.fullmatch(line):
            elements.append(BacktrackElement(int(m.group(1))))
        elif line in ("<success />", "<failure />"):
            elements.append(VerdictElement(line == "<success />"))
        else:
            raise DocumentSchemaError(where(), f"unrecognized line {line[:60]!r}")
        pos += 1
    doc = Document(tuple(elements))
    validate_document(doc)
    return doc


def validate_document(doc: Document) -> None:
    elements = doc.elements
    if not elements:
        raise DocumentSchemaError("/", "empty document")
    first = elements[0]
    if not (isinstance(first, StateElement) and first.id == 0 and not first.complete):
        raise DocumentSchemaError("/element[0]", "document must open with state 0")
    verdicts = [k for k, e in enumerate(elements) if isinstance(e, VerdictElement)]
    if len(verdicts) != 1 or verdicts[0] != len(elements) - 1:
        raise DocumentSchemaError("/", "exactly one terminal tag is required, at the end")
    seen: set[int] = set()
    next_id = 0
    for k, e in enumerate(elements[:-1]):
        path = f"/element[{k}]"
        if isinstance(e, StateElement):
            if e.id == next_id:
                seen.add(e.id)
                next_id += 1
            elif e.id in seen:
                prev = elements[k - 1] if k else None
                if not (isinstance(prev, BacktrackElement) and prev.target == e.id):
                    raise DocumentSchemaError(path, f"state {e.id} revisited without a backtrack")
            else:
                raise DocumentSchemaError(path, f"state id {e.id} skips ahead of {next_id}")
        elif isinstance(e, BacktrackElement):
            if e.target not in seen:
                raise DocumentSchemaError(path, f"backtrack to unknown state {e.target}")
            after = elements[k + 1]
            if not (isinstance(after, StateElement) and after.id == e.target):
                raise DocumentSchemaError(path, f"backtrack to {e.target} is not followed by that state")


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs and drop whitespace around tags, for
    comparing against hand-indented documents."""
    text = re.sub(r"\s+", " ", text)
    return re.sub(r"\s*(<[^<>]*>)\s*", r"\1", text).strip()


def split_prompt_completion(doc: Document | str, mode: str) -> tuple[str, str]:
    """Prompt is state 0 plus ``||``; RT completion is the rest, DP the verdict tag."""
    text = doc.text if isinstance(doc, Document) else doc
    end = text.find("</state>")
    if end < 0:
        raise DocumentSchemaError("/", "no closing </state>")
    end += len("</state>")
    prompt = text[:end] + SEPARATOR
    mode = mode.lower()
    if mode == "rt":
        return prompt, text[end:]
    if mode == "dp":
        tail = text.rsplit("\n", 1)[-1]
        if tail not in ("<success />", "<failure />"):
            raise DocumentSchemaError("/", "document lacks a terminal tag")
        return prompt, tail
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Dataset records


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    split: str
    statement: str
    prompt: str
    completion_rt: str
    completion_dp: str
    label: bool
    depth: int
    size: int
    doc_chars: int

    def to_json(self) -> str:
        return json.dumps({k: getattr(self, k) for k in RECORD_FIELDS}, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        data = json.loads(line)
        return cls(**{k: data[k] for k in RECORD_FIELDS})

    @property
    def document(self) -> str:
        return self.prompt[: -len(SEPARATOR)] + self.completion_rt


def make_record(statement: StatementRecord, budget: int | None = None, mode: str = "both") -> DatasetRecord:
    kwargs = {} if budget is None else {"budget": budget}
    trace = extract_trace(search(statement.formula, decls=statement.decls, **kwargs))
    doc = render_document(trace)
    text = doc.text
    prompt, rt = split_prompt_completion(text, "rt")
    _, dp = split_prompt_completion(text, "dp")
    if mode == "dp":
        rt = ""
    elif mode == "rt":
        dp = ""
    return DatasetRecord(
        id=f"{statement.split}-{statement.index}",
        split=statement.split,
        statement=to_text(statement.formula, "lean"),
        prompt=prompt,
        completion_rt=rt,
        completion_dp=dp,
        label=trace.verdict is Verdict.SUCCESS,
        depth=trace_depth(trace),
        size=statement.size,
        doc_chars=len(text),
    )


# ---------------------------------------------------------------------------
# Shards


@dataclass(frozen=True)
class ShardInfo:
    name: str
    records: int
    sha256: str


@dataclass
class Manifest:
    shards: list[ShardInfo]
    config: dict
    seed: int | None
    dropped: list[str] = field(default_factory=list)

    @property
    def total_records(self) -> int:
        return sum(s.records for s in self.shards)

    def to_dict(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "config": self.config,
            "seed": self.seed,
            "total_records": self.total_records,
            "shards": [{"name": s.name, "records": s.records, "sha256": s.sha256} for s in self.shards],
            "dropped": {"count": len(self.dropped), "ids": self.dropped},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Manifest":
        shards = [ShardInfo(s["name"], s["records"], s["sha256"]) for s in data["shards"]]
        return cls(shards, data["config"], data["seed"], list(data.get("dropped", {}).get("ids", [])))


def write_shards(records: Iterable[DatasetRecord], directory: str | os.PathLike, shard_size: int,
                 config: dict | None = None, seed: int | None = None, gzip: bool = False,
                 dropped: list[str] | None = None) -> Manifest:
    """Write records as JSON lines, ``shard_size`` per file, plus a manifest.

    Shards are written under a temporary name and renamed when full. On any
    error every file this call created is removed.
    """
    if shard_size <= 0:
        raise ValueError("shard size must be positive")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    suffix = ".jsonl.gz" if gzip else ".jsonl"
    created: list[Path] = []
    shards: list[ShardInfo] = []
    handle = None
    count = 0

    def open_shard():
        tmp = out / f"shard-{len(shards):05d}{suffix}.tmp"
        created.append(tmp)
        raw = open(tmp, "wb")
        if gzip:
            # empty filename and zero mtime keep the bytes reproducible
            return raw, gzip_module.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0)
        return raw, raw

    def close_shard():
        raw, stream = handle
        stream.close()
        raw.close()
        tmp = created[-1]
        final = tmp.with_name(tmp.name[: -len(".tmp")])
        tmp.replace(final)
        created[-1] = final
        digest = hashlib.sha256()
        with open(final, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 20), b""):
                digest.update(block)
        shards.append(ShardInfo(final.name, count, digest.hexdigest()))

    try:
        for record in records:
            if handle is None:
                handle, count = open_shard(), 0
            handle[1].write((record.to_json() + "\n").encode("utf-8"))
            count += 1
            if count == shard_size:
                close_shard()
                handle = None
        if handle is not None:
            close_shard()
            handle = None
        manifest = Manifest(shards, dict(config or {}), seed, list(dropped or []))
        path = out / MANIFEST_NAME
        created.append(path)
        path.write_text(json.dumps(manifest.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        return manifest
    except BaseException:
        if handle is not None:
            handle[1].close()
            handle[0].close()
        for path in created:
            path.unlink(missing_ok=True)
        raise


def read_shards(directory: str | os.PathLike) -> Iterator[DatasetRecord]:
    out = Path(directory)
    manifest = json.loads((out / MANIFEST_NAME).read_text(encoding="utf-8"))
    for shard in manifest["shards"]:
        data = (out / shard["name"]).read_bytes()
        if shard["name"].endswith(".gz"):
            data = gzip_module.decompress(data)
        for line in data.decode("utf-8").splitlines():
            yield DatasetRecord.from_json(line)


# ---------------------------------------------------------------------------
# Topology statistics


@dataclass(frozen=True)
class DepthSummary:
    n: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[int, ...]


@dataclass(frozen=True)
class TopologyStats:
    records: int
    breadth: dict[int, int]
    depth: DepthSummary
    label_true: float
    median_depth: float
    median_doc_chars: float

    def to_dict(self) -> dict:
        return {
            "records": self.records,
            "breadth": {str(k): v for k, v in sorted(self.breadth.items())},
            "depth": self.depth.__dict__ | {"outliers": list(self.depth.outliers)},
            "label_true": self.label_true,
            "median_depth": self.median_depth,
            "median_doc_chars": self.median_doc_chars,
        }


def summarize_depths(depths: list[int]) -> DepthSummary:
    """Boxplot summary: quartiles and whiskers at the furthest data within 1.5 IQR."""
    data = sorted(depths)
    if len(data) == 1:
        q1 = q3 = med = float(data[0])
    else:
        q1, med, q3 = statistics.quantiles(data, n=4, method="inclusive")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = [d for d in data if lo_fence <= d <= hi_fence]
    outliers = tuple(d for d in data if d < lo_fence or d > hi_fence)
    return DepthSummary(len(data), med, q1, q3, min(inside), max(inside), outliers)


def dataset_stats(records: Iterable[DatasetRecord], depth_sample_size: int = 500, seed: int = 0,
                  breadth_max_size: int = 4, n_vars: int = 3) -> TopologyStats:
    from .splitgen import FullSpec, ImplySpec, breadth

    rows = list(records)
    if not rows:
        raise ValueError("no records to summarize")
    rng = random.Random(f"stats:{seed}")
    sample = rows if len(rows) <= depth_sample_size else rng.sample(rows, depth_sample_size)
    depth = summarize_depths([r.depth for r in sample])
    splits = {r.split for r in rows}
    table: dict[int, int] = {}
    for name, spec in (("full", FullSpec(n_vars=n_vars)), ("imply", ImplySpec(n_vars=n_vars))):
        if name in splits:
            for size in sorted({r.size for r in rows if r.split == name}):
                if size <= breadth_max_size:
                    table[size] = table.get(size, 0) + breadth(spec, size)
    return TopologyStats(
        records=len(rows),
        breadth=table,
        depth=depth,
        label_true=sum(r.label for r in rows) / len(rows),
        median_depth=statistics.median(r.depth for r in rows),
        median_doc_chars=statistics.median(r.doc_chars for r in rows),
    )
