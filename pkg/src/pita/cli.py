"""Command-line entry point: ``pita <subcommand> [flags]``.

Failures print one JSON object on stderr, e.g.
``{"error": "BudgetExceededError", "message": "..."}``, and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from functools import lru_cache
from pathlib import Path
from typing import Iterator

from . import splitgen, theory, ti
from .formula import parse, to_text
from .prover import DEFAULT_BUDGET, Verdict, audit_against_oracle, prove
from .render import dataset_stats, make_record, read_shards, render_document, write_shards

OUT_ENV = "PITA_OUT_DIR"
DEFAULT_OR_COUNT = 10_000
DEFAULT_OR_MAX_CHARS = 3400
DEFAULT_PHP_CONDITIONS = 36
DEFAULT_MAX_GROUPINGS = 2000
CHUNK = 512


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        pair = (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if pair[0] > pair[1]:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return pair


# ---------------------------------------------------------------------------
# Generation


def generation_config(args) -> dict:
    """Everything that determines record content; echoed into the manifest."""
    split = args.split
    cfg = {"split": split, "seed": args.seed, "mode": args.mode, "budget": args.budget}
    if split in ("full", "imply"):
        default = 5 if split == "full" else 7
        cfg["max_size"] = args.max_size or default
        cfg["count"] = args.count
        cfg["max_chars"] = args.max_chars
    elif split == "or":
        cfg["distractors"] = list(args.distractors or (1, 8))
        cfg["count"] = args.count or DEFAULT_OR_COUNT
        cfg["max_chars"] = args.max_chars if args.max_chars is not None else DEFAULT_OR_MAX_CHARS
    else:
        cfg["pigeons"] = list(args.pigeons or (2, 3))
        cfg["holes"] = list(args.holes or (2, 3))
        cfg["conditions"] = args.conditions
        cfg["max_groupings"] = args.max_groupings
        cfg["count"] = args.count
        cfg["max_chars"] = args.max_chars
    return cfg


def _spec(cfg: dict):
    if cfg["split"] == "full":
        return splitgen.FullSpec(max_atoms=cfg["max_size"])
    if cfg["split"] == "imply":
        return splitgen.ImplySpec(max_atoms=cfg["max_size"])
    if cfg["split"] == "or":
        return splitgen.OrSpec(distractors=tuple(cfg["distractors"]))
    raise ValueError(cfg["split"])


@lru_cache(maxsize=8)
def _php_plan(key: str) -> tuple[tuple[splitgen.PhpSpec, ...], tuple[tuple[int, int], ...]]:
    cfg = json.loads(key)
    conditions = splitgen.php_conditions(tuple(cfg["pigeons"]), tuple(cfg["holes"]), cfg["conditions"], cfg["seed"])
    plan = []
    for c, spec in enumerate(conditions):
        for g in range(min(splitgen.php_grouping_count(spec), cfg["max_groupings"])):
            plan.append((c, g))
    return tuple(conditions), tuple(plan)


def statement_count(cfg: dict) -> int:
    split = cfg["split"]
    if split in ("full", "imply"):
        total = splitgen.count_syntactic(_spec(cfg), cfg["max_size"])
    elif split == "or":
        total = cfg["count"]
    else:
        total = len(_php_plan(json.dumps(cfg, sort_keys=True))[1])
    return total if cfg.get("count") is None else min(total, cfg["count"])


def statements(cfg: dict, start: int, stop: int) -> Iterator[splitgen.StatementRecord]:
    split = cfg["split"]
    if split in ("full", "imply"):
        yield from splitgen.enumerate_syntactic(_spec(cfg), cfg["max_size"], start, stop)
    elif split == "or":
        spec = _spec(cfg)
        for index in range(start, stop):
            yield splitgen.or_record(spec, cfg["seed"], index)
    else:
        conditions, plan = _php_plan(json.dumps(cfg, sort_keys=True))
        for index in range(start, stop):
            c, g = plan[index]
            yield splitgen.build_php(conditions[c], g, index)


def _build_chunk(job):
    cfg, start, stop = job
    out = []
    for st in statements(cfg, start, stop):
        record = make_record(st, budget=cfg["budget"], mode=cfg["mode"])
        keep = cfg["max_chars"] is None or record.doc_chars <= cfg["max_chars"]
        out.append((record, keep))
    return out


def generate(cfg: dict, out: Path, shard_size: int, workers: int, gzip: bool = False):
    total = statement_count(cfg)
    jobs = [(cfg, s, min(s + CHUNK, total)) for s in range(0, total, CHUNK)]
    dropped: list[str] = []

    def records(results):
        for chunk in results:
            for record, keep in chunk:
                if keep:
                    yield record
                else:
                    dropped.append(record.id)

    manifest_cfg = dict(cfg, shard_size=shard_size, gzip=gzip)
    if workers <= 1:
        return write_shards(records(map(_build_chunk, jobs)), out, shard_size, manifest_cfg, cfg["seed"],
                            gzip=gzip, dropped=dropped)
    with multiprocessing.get_context("spawn" if sys.platform == "darwin" else "fork").Pool(workers) as pool:
        return write_shards(records(pool.imap(_build_chunk, jobs)), out, shard_size, manifest_cfg, cfg["seed"],
                            gzip=gzip, dropped=dropped)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_generate(args) -> int:
    out = args.out or os.environ.get(OUT_ENV)
    if not out:
        raise CliError(f"--out or ${OUT_ENV} is required")
    if args.split in ("or", "php") and args.seed is None:
        raise CliError(f"--seed is mandatory for the sampled split {args.split!r}")
    cfg = generation_config(args)
    workers = args.workers or os.cpu_count() or 1
    manifest = generate(cfg, Path(out), args.shard_size, workers, args.gzip)
    print(json.dumps({"out": str(out), "records": manifest.total_records, "shards": len(manifest.shards),
                      "dropped": len(manifest.dropped)}))
    return 0


def _enumerable_spec(args):
    if args.split == "full":
        return splitgen.FullSpec()
    if args.split == "imply":
        return splitgen.ImplySpec()
    raise CliError(f"split {args.split!r} is not enumerable")


def _cmd_count(args) -> int:
    spec = _enumerable_spec(args)
    print(splitgen.count_syntactic(spec, args.max_size or spec.max_atoms))
    return 0


def _cmd_breadth(args) -> int:
    print(splitgen.breadth(_enumerable_spec(args), args.size, include_mixed=args.include_mixed))
    return 0


def _cmd_stats(args) -> int:
    if args.input:
        records = list(read_shards(args.input))
    else:
        if args.split in ("or", "php") and args.seed is None:
            raise CliError(f"--seed is mandatory for the sampled split {args.split!r}")
        cfg = generation_config(args)
        total = statement_count(cfg)
        records = [r for r, keep in _build_chunk((cfg, 0, total)) if keep]
    stats = dataset_stats(records, depth_sample_size=args.sample_size, seed=args.seed or 0,
                          breadth_max_size=args.breadth_max_size)
    print(json.dumps(stats.to_dict()))
    return 0


def _cmd_prove(args) -> int:
    f = parse(args.formula)
    decls = tuple(args.decls.split()) if args.decls is not None else ()
    trace = prove(f, decls, budget=args.budget)
    print(render_document(trace).text)
    return 0


def _cmd_audit(args) -> int:
    if args.formula:
        formulas = [parse(args.formula)]
    else:
        spec = _enumerable_spec(args)
        formulas = (st.formula for st in splitgen.enumerate_syntactic(spec, args.max_size or 5))
    checked = 0
    discrepancies = []
    for f in formulas:
        report = audit_against_oracle(f, budget=args.budget)
        checked += 1
        if report.discrepancy:
            discrepancies.append(to_text(f))
    print(json.dumps({"checked": checked, "discrepancies": len(discrepancies)}))
    for text in discrepancies:
        print(text)
    return 0


def _cmd_ti_gen(args) -> int:
    variant = args.ti_variant
    cfg = ti.TIConfig(args.ti_B, args.ti_D, args.ti_k, "short" if variant == "short" else "full",
                      args.inverted_negatives)
    seed = 0 if args.seed is None else args.seed
    examples = ti.sample_stream(cfg, args.count or 1000, args.phase, seed)
    if args.output:
        path = Path(args.output)
        tmp = path.with_name(path.name + ".tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as handle:
                n = ti.export_jsonl(examples, cfg, variant, handle)
            tmp.replace(path)
        except BaseException:
            tmp.unlink(missing_ok=True)
            raise
        print(json.dumps({"out": str(path), "records": n}))
    else:
        ti.export_jsonl(examples, cfg, variant, sys.stdout)
    return 0


def _cmd_theory_check(args) -> int:
    results = theory.run_suite()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pita", description="Propositional inference dataset tools.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def split_flags(p, required=True):
        p.add_argument("--split", choices=("full", "imply", "or", "php"), required=required)
        p.add_argument("--max-size", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--count", type=int, help="cap on the number of statements")
        p.add_argument("--max-chars", type=int, help="drop records whose document is longer")
        p.add_argument("--mode", choices=("rt", "dp", "both"), default="both")
        p.add_argument("--distractors", type=_range, help="Or distractor range LO..HI")
        p.add_argument("--pigeons", type=_range, help="PHP pigeon range LO..HI")
        p.add_argument("--holes", type=_range, help="PHP hole range LO..HI")
        p.add_argument("--conditions", type=int, default=DEFAULT_PHP_CONDITIONS)
        p.add_argument("--max-groupings", type=int, default=DEFAULT_MAX_GROUPINGS)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = sub.add_parser("generate", help="write a split as JSONL shards")
    split_flags(p)
    p.add_argument("--out")
    p.add_argument("--shard-size", type=int, default=100_000)
    p.add_argument("--workers", type=int)
    p.add_argument("--gzip", action="store_true")
    p.set_defaults(run=_cmd_generate)

    p = sub.add_parser("count", help="closed-form statement count")
    p.add_argument("--split", choices=("full", "imply"), required=True)
    p.add_argument("--max-size", type=int)
    p.set_defaults(run=_cmd_count)

    p = sub.add_parser("breadth", help="distinct statements of one size")
    p.add_argument("--split", choices=("full", "imply"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--include-mixed", action="store_true",
                   help="also count statements mixing variables with True/False")
    p.set_defaults(run=_cmd_breadth)

    p = sub.add_parser("stats", help="topology statistics")
    split_flags(p, required=False)
    p.add_argument("--in", dest="input", help="read records from a shard directory")
    p.add_argument("--sample-size", type=int, default=500)
    p.add_argument("--breadth-max-size", type=int, default=4)
    p.set_defaults(run=_cmd_stats)

    p = sub.add_parser("prove", help="print the proof document for one formula")
    p.add_argument("--formula", required=True)
    p.add_argument("--decls", help='declaration line, e.g. "p1 p2 p3"')
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(run=_cmd_prove)

    p = sub.add_parser("audit", help="compare prover verdicts with truth tables")
    p.add_argument("--split", choices=("full", "imply"), default="imply")
    p.add_argument("--max-size", type=int)
    p.add_argument("--formula")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(run=_cmd_audit)

    p = sub.add_parser("ti-gen", help="export transitive-inference sequences")
    p.add_argument("--ti-B", type=int, required=True)
    p.add_argument("--ti-D", type=int, required=True)
    p.add_argument("--ti-k", type=int, required=True)
    p.add_argument("--ti-variant", choices=("full", "short", "dp"), default="full")
    p.add_argument("--phase", choices=("train", "test"), default="train")
    p.add_argument("--inverted-negatives", action="store_true")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output")
    p.set_defaults(run=_cmd_ti_gen)

    p = sub.add_parser("theory-check", help="run the analytic theory suite")
    p.set_defaults(run=_cmd_theory_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.run(args)
    except KeyboardInterrupt:
        print(json.dumps({"error": "Interrupted", "message": "interrupted"}), file=sys.stderr)
        return 130
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parseable line
        kind = "UsageError" if isinstance(exc, CliError) else type(exc).__name__
        print(json.dumps({"error": kind, "message": str(exc)}, ensure_ascii=False), file=sys.stderr)
        return 2 if isinstance(exc, CliError) else 1


if __name__ == "__main__":
    sys.exit(main())
