import gzip
import hashlib
import json
import random

import pytest

from goldens import FULL_STATEMENT, IMPLY_STATEMENT, FULL_GOLDEN_HEAD, FULL_GOLDEN_TAIL, IMPLY_GOLDEN
from pita.formula import parse
from pita.prover import prove
from pita.render import (
    DatasetRecord,
    DocumentSchemaError,
    dataset_stats,
    make_record,
    normalize_whitespace,
    parse_document,
    read_shards,
    render_document,
    split_prompt_completion,
    summarize_depths,
    write_shards,
)
from pita.splitgen import FullSpec, ImplySpec, OrSpec, PhpSpec, build_php, enumerate_syntactic, or_record, statement_at

DECLS = ("p1", "p2", "p3")


def doc_for(text, decls=DECLS):
    return render_document(prove(parse(text), decls))


def test_imply_golden_document():
    doc = doc_for(IMPLY_STATEMENT)
    assert normalize_whitespace(doc.text) == normalize_whitespace(IMPLY_GOLDEN)
    assert doc.elements[1].text == "intro h1"


def test_full_golden_document_head_and_tail():
    doc = doc_for(FULL_STATEMENT)
    norm = normalize_whitespace(doc.text)
    assert norm.startswith(normalize_whitespace(FULL_GOLDEN_HEAD))
    assert norm.endswith(normalize_whitespace(FULL_GOLDEN_TAIL))
    assert doc.max_id == 7
    assert doc.text.endswith("<failure />")


def test_declaration_line():
    doc = doc_for("p1 → p1")
    assert doc.elements[0].lines == ("p1 p2 p3 : Prop",)
    assert doc_for("p1 → p1", ()).elements[0].lines == ()


def test_no_indentation():
    doc = doc_for("p1 ∧ p2 → p2")
    assert all(line == line.lstrip() for line in doc.text.split("\n"))


def sample_documents(n=1000):
    rng = random.Random(4)
    docs = []
    for _ in range(n // 4):
        docs.append(render_document(prove(statement_at(FullSpec(), rng.randrange(3_630_455)).formula, DECLS)))
        docs.append(render_document(prove(statement_at(ImplySpec(), rng.randrange(11_015_905)).formula, DECLS)))
        docs.append(render_document(prove(or_record(OrSpec(), 2, rng.randrange(10**6)).formula)))
        docs.append(render_document(prove(build_php(PhpSpec.complete(2, rng.randint(1, 3))).formula)))
    return docs


def test_round_trip_thousand_documents():
    for doc in sample_documents():
        text = doc.text
        parsed = parse_document(text)
        assert parsed == doc
        assert parsed.text == text


@pytest.mark.parametrize("mutate, fragment", [
    (lambda t: t.rsplit("\n", 1)[0], "terminal"),
    (lambda t: t.replace('<backtrack to="1" />', '<backtrack to="42" />'), "unknown state"),
    (lambda t: t.replace('<state id="3">', '<state id="9">', 1), "skips"),
    (lambda t: t.replace("<then>⊢ p2</then>", ""), "<then>"),
    (lambda t: t + "\n<success />", "terminal"),
    (lambda t: t.replace("<tactic>apply Or.inl</tactic>", "<tactc>apply Or.inl</tactc>", 1), "unrecognized"),
    (lambda t: t.replace('<backtrack to="1" />\n', "", 1), "without a backtrack"),
])
def test_schema_violations(mutate, fragment):
    text = doc_for(FULL_STATEMENT).text
    with pytest.raises(DocumentSchemaError) as err:
        parse_document(mutate(text))
    assert fragment in str(err.value)
    assert err.value.path.startswith("/")


def test_prompt_completion_partition():
    for doc in sample_documents(100):
        text = doc.text
        prompt, rt = split_prompt_completion(doc, "rt")
        assert prompt.endswith("</state>||")
        assert prompt[:-2] + rt == text
        _, dp = split_prompt_completion(doc, "dp")
        assert dp == ("<success />" if doc.success else "<failure />")
    with pytest.raises(DocumentSchemaError):
        split_prompt_completion("<tactic>x</tactic>", "rt")


def test_make_record_fields():
    st = statement_at(ImplySpec(), 7)
    rec = make_record(st)
    assert rec.id == "imply-7"
    assert rec.label == rec.document.endswith("<success />")
    assert rec.doc_chars == len(rec.document)
    assert parse_document(rec.document).max_id == rec.depth
    assert DatasetRecord.from_json(rec.to_json()) == rec
    assert list(json.loads(rec.to_json())) == [
        "id", "split", "statement", "prompt", "completion_rt", "completion_dp",
        "label", "depth", "size", "doc_chars",
    ]


def some_records(n):
    return [make_record(st) for st in enumerate_syntactic(ImplySpec(), 5, 0, n)]


def test_write_shards_layout(tmp_path):
    records = some_records(2500)
    manifest = write_shards(records, tmp_path, 1000, {"split": "imply"}, seed=3)
    assert [s.records for s in manifest.shards] == [1000, 1000, 500]
    assert manifest.total_records == 2500
    saved = json.loads((tmp_path / "manifest.json").read_text())
    assert saved["total_records"] == sum(s["records"] for s in saved["shards"]) == 2500
    assert saved["seed"] == 3 and saved["config"] == {"split": "imply"}
    for shard in saved["shards"]:
        assert hashlib.sha256((tmp_path / shard["name"]).read_bytes()).hexdigest() == shard["sha256"]
    assert list(read_shards(tmp_path)) == records


def test_write_shards_deterministic_and_gzip(tmp_path):
    records = some_records(300)
    a = write_shards(records, tmp_path / "a", 128, {}, 1, gzip=True)
    b = write_shards(records, tmp_path / "b", 128, {}, 1, gzip=True)
    assert [s.sha256 for s in a.shards] == [s.sha256 for s in b.shards]
    data = gzip.decompress((tmp_path / "a" / a.shards[0].name).read_bytes()).decode()
    assert len(data.splitlines()) == 128
    assert list(read_shards(tmp_path / "a")) == records


def test_write_shards_cleans_up_on_abort(tmp_path):
    def broken():
        yield from some_records(150)
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        write_shards(broken(), tmp_path, 100)
    assert list(tmp_path.iterdir()) == []


def test_depth_summary():
    s = summarize_depths([1, 2, 3, 4, 5, 6, 7, 8, 100])
    assert (s.q1, s.median, s.q3) == (3, 5, 7)
    assert s.outliers == (100,)
    assert s.whisker_high == 8 and s.whisker_low == 1


def test_dataset_stats_breadth_and_labels():
    records = [make_record(st) for st in enumerate_syntactic(ImplySpec(), 2) if st.size == 2]
    stats = dataset_stats(records)
    assert stats.breadth == {2: 6}
    or_records = [make_record(or_record(OrSpec(), 0, i)) for i in range(200)]
    assert dataset_stats(or_records).label_true == 0.5
    with pytest.raises(ValueError):
        dataset_stats([])


def test_php_deeper_than_full():
    rng = random.Random(0)
    full = [make_record(statement_at(FullSpec(), rng.randrange(3_630_455))) for _ in range(300)]
    from pita.splitgen import php_conditions, php_grouping_count
    php = []
    for spec in php_conditions((2, 3), (2, 3), 36, 0):
        for g in range(min(php_grouping_count(spec), 5)):
            php.append(make_record(build_php(spec, g)))
    assert dataset_stats(php).median_depth > dataset_stats(full).median_depth
