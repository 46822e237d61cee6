"""Acceptance criteria, one check per criterion.

Each check returns ``(passed, detail)``. Under pytest a PASS/FAIL line per
criterion is printed in the terminal summary; run this file directly to
print the same lines without pytest.

Criterion 1's materialization bound is estimated from a timed random slice
unless ``PITA_ACCEPT_MATERIALIZE=1`` is set, in which case the whole Full
split is generated for real.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import json
import os
import random
import sys
import tempfile
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from goldens import FULL_STATEMENT, IMPLY_STATEMENT, IMPLY_GOLDEN  # noqa: E402
from oracles import breadth_ref, closed_form_count, kripke_countermodel, tautology_ref  # noqa: E402
from pita import splitgen, theory, ti  # noqa: E402
from pita.cli import main  # noqa: E402
from pita.formula import Bin, Op, is_tautology, parse, variables  # noqa: E402
from pita.prover import SoundnessError, Status, Verdict, audit_against_oracle, prove, search  # noqa: E402
from pita.render import (  # noqa: E402
    make_record,
    normalize_whitespace,
    parse_document,
    render_document,
    split_prompt_completion,
)

DECLS = ("p1", "p2", "p3")
RESULTS: dict[int, tuple[bool, str]] = {}


def cli(*argv) -> tuple[int, str]:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, buf.getvalue()


# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    _, full = cli("count", "--split", "full", "--max-size", "5")
    _, imply = cli("count", "--split", "imply", "--max-size", "7")
    elapsed = time.perf_counter() - t0
    full, imply = int(full), int(imply)
    exact = (full == closed_form_count(3, 5, 5) == 3_630_455
             and imply == closed_form_count(1, 5, 7) == 11_015_905)
    rounded = round(full / 1e6, 1) == 3.6 and round(imply / 1e6) == 11
    spec = splitgen.FullSpec()
    if os.environ.get("PITA_ACCEPT_MATERIALIZE") == "1":
        with tempfile.TemporaryDirectory() as tmp:
            t0 = time.perf_counter()
            code, _ = cli("generate", "--split", "full", "--out", tmp, "--shard-size", "500000")
            wall = time.perf_counter() - t0
        materialize_ok = code == 0 and wall < 1800
        how = f"measured {wall / 60:.1f} min on {os.cpu_count()} cores"
    else:
        rng = random.Random(0)
        idx = [rng.randrange(full) for _ in range(3000)]
        t0 = time.perf_counter()
        for i in idx:
            make_record(splitgen.statement_at(spec, i))
        per = (time.perf_counter() - t0) / len(idx)
        serial = per * full
        # a single-core bound is stricter than the eight-core one
        materialize_ok = serial < 1800
        how = f"estimated {serial / 60:.1f} min single-core ({per * 1e3:.3f} ms/record)"
    ok = exact and rounded and elapsed < 1 and materialize_ok
    return ok, f"full={full} imply={imply} count_time={elapsed:.3f}s materialize {how}"


def criterion_2():
    t0 = time.perf_counter()
    ok = splitgen.breadth(splitgen.ImplySpec(), 2) == 6
    table = []
    for spec in (splitgen.FullSpec(), splitgen.ImplySpec()):
        for mixed in (False, True):
            for size in range(1, 5):
                got = splitgen.breadth(spec, size, include_mixed=mixed)
                ok &= got == breadth_ref(spec.connectives, size, mixed)
                table.append(got)
    elapsed = time.perf_counter() - t0
    return ok and elapsed < 60, f"imply(2)=6 oracle sizes<=4 values={table} time={elapsed:.1f}s"


def criterion_3():
    t0 = time.perf_counter()
    checked = unsound = 0
    for st in splitgen.enumerate_syntactic(splitgen.FullSpec(), 4):
        checked += 1
        if search(st.formula).status is Status.PROVED and not tautology_ref(st.formula):
            unsound += 1
    elapsed = time.perf_counter() - t0
    ok = checked == 86_705 and unsound == 0 and elapsed < 600
    return ok, f"checked={checked} unsound={unsound} time={elapsed:.1f}s"


def _php_structures(m, n):
    """Every valid PhpSpec for m pigeons and n holes, lazily."""
    triples = [(i1, i2, j) for j in range(1, n + 1) for i1, i2 in itertools.combinations(range(1, m + 1), 2)]
    hole_sets = [s for r in range(1, n + 1) for s in itertools.combinations(range(1, n + 1), r)]
    check_sets = [s for r in range(1, len(triples) + 1) for s in itertools.combinations(triples, r)]
    for r in range(1, m + 1):
        for pigeons in itertools.combinations(range(1, m + 1), r):
            for allowed in itertools.product(hole_sets, repeat=r):
                for checks in check_sets:
                    yield splitgen.PhpSpec(m, n, tuple(zip(pigeons, allowed)), checks)


def _php_structure_count(m, n):
    # sum over pigeon subsets S of (2^n - 1)^|S| telescopes to 2^(mn) - 1
    pairs = m * (m - 1) // 2
    return (2 ** (m * n) - 1) * (2 ** (pairs * n) - 1)


PHP_EXHAUSTIVE_LIMIT = 5000
PHP_SAMPLE = 1500


def php_instances(seed=0):
    """Complete instances under many groupings, every structure where the
    structure count is small, a seeded sample otherwise; three groupings each."""
    rng = random.Random(f"accept-php:{seed}")
    shapes = [(m, n) for m in range(2, 10) for n in range(1, 10) if m * n <= 9]
    for m, n in shapes:
        spec = splitgen.PhpSpec.complete(m, n)
        total = splitgen.php_grouping_count(spec)
        groups = range(total) if total <= 200 else sorted({rng.randrange(total) for _ in range(200)})
        for g in groups:
            yield spec, g
        if _php_structure_count(m, n) <= PHP_EXHAUSTIVE_LIMIT:
            specs = _php_structures(m, n)
        else:
            specs = (splitgen.sample_php_spec(m, n, rng) for _ in range(PHP_SAMPLE))
        for spec in specs:
            total = splitgen.php_grouping_count(spec)
            for g in sorted({0, total - 1, rng.randrange(total)}):
                yield spec, g


def criterion_4():
    t0 = time.perf_counter()
    spec = splitgen.OrSpec(distractors=(1, 9))
    or_bad = labels_true = 0
    max_names = 0
    for i in range(10_000):
        rec = splitgen.or_record(spec, 0, i)
        max_names = max(max_names, len(variables(rec.formula)))
        truth = tautology_ref(rec.formula)
        labels_true += truth
        or_bad += (prove(rec.formula).verdict is Verdict.SUCCESS) != truth
    php_n = php_bad = 0
    for php, g in php_instances():
        f = splitgen.build_php(php, g).formula
        # bitset truth table here; the tree-walking oracle is too slow at 9 variables
        truth = is_tautology(f)
        php_n += 1
        php_bad += (prove(f).verdict is Verdict.SUCCESS) != truth or truth != splitgen.php_forced(php)
    elapsed = time.perf_counter() - t0
    ok = or_bad == 0 and max_names <= 10 and labels_true == 5000 and php_bad == 0
    return ok, (f"or: 10000 samples disagree={or_bad} max_names={max_names} true={labels_true}/10000; "
                f"php: {php_n} instances disagree={php_bad} time={elapsed:.0f}s")


def _is_peirce(f):
    """((A → B) → A) → A for arbitrary subformulas A, B."""
    if not (isinstance(f, Bin) and f.op is Op.IMP and isinstance(f.left, Bin) and f.left.op is Op.IMP):
        return False
    inner = f.left.left
    return isinstance(inner, Bin) and inner.op is Op.IMP and inner.left == f.left.right == f.right


def criterion_5():
    t0 = time.perf_counter()
    code, out = cli("audit", "--split", "imply", "--max-size", "5")
    header, *listed = out.splitlines()
    summary = json.loads(header)
    listed = {parse(text) for text in listed}
    # brute-force cross-check, independent of the audit path
    expected = set()
    for st in splitgen.enumerate_syntactic(splitgen.ImplySpec(), 5):
        if tautology_ref(st.formula) and prove(st.formula).verdict is Verdict.FAILURE:
            expected.add(st.formula)
    genuine = all(kripke_countermodel(f, 4) is not None for f in expected)
    has_peirce = any(_is_peirce(f) for f in listed)
    ok = (code == 0 and listed == expected and summary["discrepancies"] == len(listed)
          and bool(listed) == has_peirce and genuine)
    try:
        audit_against_oracle(parse("((p1 → p2) → p1) → p1"))
    except SoundnessError:
        ok = False
    elapsed = time.perf_counter() - t0
    return ok, (f"checked={summary['checked']} discrepancies={len(listed)} peirce_present={has_peirce} "
                f"kripke_refuted=all time={elapsed:.0f}s")


def criterion_6():
    doc = render_document(prove(parse(IMPLY_STATEMENT), DECLS))
    imply_ok = normalize_whitespace(doc.text) == normalize_whitespace(IMPLY_GOLDEN)
    full_depth_ok = prove(parse(FULL_STATEMENT), DECLS).verdict is Verdict.FAILURE and \
        render_document(prove(parse(FULL_STATEMENT), DECLS)).max_id == 7
    rng = random.Random(6)
    records = [make_record(splitgen.statement_at(splitgen.FullSpec(), rng.randrange(3_630_455))) for _ in range(500)]
    records += [make_record(splitgen.statement_at(splitgen.ImplySpec(), rng.randrange(11_015_905))) for _ in range(500)]
    records += [make_record(splitgen.or_record(splitgen.OrSpec(), 6, i)) for i in range(500)]
    records += [make_record(splitgen.build_php(s, 0)) for s in splitgen.php_conditions((2, 3), (1, 3), 200, 6)]
    round_trip = prompts = True
    for rec in records:
        text = rec.document
        round_trip &= parse_document(text).text == text
        prompt, completion = split_prompt_completion(text, "rt")
        prompts &= prompt.endswith("</state>||") and rec.prompt == prompt and rec.completion_rt == completion
    ok = imply_ok and full_depth_ok and round_trip and prompts
    return ok, (f"imply golden match={imply_ok} full golden depth 7={full_depth_ok} round_trip={round_trip} over {len(records)} docs "
                f"rt_prompts={prompts}")


def criterion_7():
    t0 = time.perf_counter()
    n_test = n_perm_ok = 0
    lengths = partition = True
    for B in range(2, 5):
        for D in range(2, 9):
            for k in range(1, D):
                for inverted in (False, True):
                    cfg = ti.TIConfig(B, D, k, inverted_negatives=inverted)
                    train = list(ti.all_examples(cfg, "train"))
                    test = list(ti.all_examples(cfg, "test"))
                    for ex in train + test:
                        lengths &= len(ti.rt_sequence(ex, cfg).ids) == D + 2
                    partition &= all(ex.distance <= k for ex in train) and all(ex.distance > k for ex in test)
                    if not 2 <= k <= D - 2:
                        continue
                    index = ti.TrainingIndex.build(cfg)
                    for ex in test:
                        out = ti.apply_permutation(ti.rt_sequence(ex, cfg), ti.test_to_train_permutation(ex, cfg))
                        n_test += 1
                        n_perm_ok += index.is_training_sequence(out.ids)
    elapsed = time.perf_counter() - t0
    ok = lengths and partition and n_test > 0 and n_perm_ok == n_test and elapsed < 60
    return ok, f"length D+2={lengths} partition={partition} permutation {n_perm_ok}/{n_test} time={elapsed:.1f}s"


def criterion_8():
    t0 = time.perf_counter()
    grid = theory.check_kl_bound([2**e for e in range(11)], range(1, 1001))
    ratio = theory.kl_ratio(1, 1000)
    scan = theory.margin_extrema_scan(4, 0.05)
    maximizers = {tuple(int(c) for c in v) for v in scan.argmax}
    perms = set(itertools.permutations((1, 1, 0, 0)))
    elapsed = time.perf_counter() - t0
    ok = (grid.passed and abs(ratio - 1) < 0.01 and maximizers == perms and scan.max_value == 0.25
          and scan.min_value == 0 and scan.argmin_all_constant and elapsed < 60)
    return ok, (f"grid {grid.points} points max L^2 KL/H={grid.max_ratio:.6f} ratio(L=1000)={ratio:.6f} "
                f"maximizers={len(maximizers)} value={scan.max_value} minimizers constant={scan.argmin_all_constant} "
                f"time={elapsed:.1f}s")


def criterion_9():
    with tempfile.TemporaryDirectory() as tmp:
        digests = []
        for workers in (1, 2):
            out = Path(tmp) / f"w{workers}"
            code, _ = cli("generate", "--split", "or", "--seed", "7", "--out", str(out), "--workers", str(workers))
            manifest = json.loads((out / "manifest.json").read_text())
            digests.append((code, [s["sha256"] for s in manifest["shards"]], manifest))
    (c1, d1, m1), (c2, d2, m2) = digests
    ok = c1 == c2 == 0 and d1 == d2 and m1 == m2 and bool(d1)
    return ok, f"shards={len(d1)} records={m1['total_records']} digests_equal={d1 == d2}"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 10)}


def line(k, passed, detail):
    return f"[{'PASS' if passed else 'FAIL'}] criterion {k}: {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    passed, detail = CRITERIA[k]()
    RESULTS[k] = (passed, detail)
    print(line(k, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    failed = 0
    for k, check in CRITERIA.items():
        passed, detail = check()
        failed += not passed
        print(line(k, passed, detail), flush=True)
    sys.exit(1 if failed else 0)
