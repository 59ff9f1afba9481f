"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import traceback
from dataclasses import replace
from pathlib import Path

from .catalog import CatalogError, load_catalog, reference_catalog
from .detection import DetectionError, filter_by_score, parse_detections
from .evaluation import aggregate_detection_report, average_rank, parse_eval_records, parse_queries
from .fingerprint import (
    REFERENCE_H2,
    SVMF,
    FormatError,
    Hyperparams,
    compute_svmf,
    decode_svmf,
    dumps_json,
    encode_svmf,
    loads_json,
)
from .graph import build_graph
from .retrieval import (
    ComparisonError,
    DuplicateKeyError,
    FingerprintIndex,
    atomic_write_bytes,
    index_load,
    index_save,
)
from .synth import (
    IDENTITY,
    REFERENCE_LEVELS,
    PerturbationParams,
    SynthError,
    build_benchmark,
    default_spec,
    evaluate_benchmark,
    hyperparams_from_manifest,
    load_bundle,
    write_bundle,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

DATA_ERRORS = (
    CatalogError,
    DetectionError,
    FormatError,
    SynthError,
    ComparisonError,
    DuplicateKeyError,
    KeyError,
    ValueError,
    OSError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("fingerprint options")
    g.add_argument("--catalog", help="catalog TSV (default: bundled 1561-class reference catalog)")
    g.add_argument("--h1", type=float, help="count weight (default 10)")
    g.add_argument("--h2", help="comma-separated distance weights for d = 0..cap (default 2,2,0.5,0.125,0.0078125)")
    g.add_argument("--cap", type=int, help="largest distance that contributes (default 4)")
    g.add_argument("--carbon-divisor", type=float, help="divisor per carbon-backbone endpoint (default 2)")
    g.add_argument("--expansion", type=float, help="box margin as a fraction of the smallest diagonal (default 0.1)")
    g.add_argument("--score-threshold", type=float, default=0.0, help="drop detections scoring below this")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path")


def hyperparams_from_args(args, base: Hyperparams | None = None) -> Hyperparams:
    hp = base or Hyperparams()
    overrides = {}
    if args.h1 is not None:
        overrides["h1"] = args.h1
    if args.carbon_divisor is not None:
        overrides["carbon_divisor"] = args.carbon_divisor
    if args.expansion is not None:
        overrides["expansion_factor"] = args.expansion
    if args.h2 is not None:
        try:
            table = tuple(float(x) for x in args.h2.split(","))
        except ValueError:
            raise UsageError(f"--h2 must be comma-separated numbers, got {args.h2!r}") from None
        overrides["h2_table"] = table
        overrides["distance_cap"] = len(table) - 1 if args.cap is None else args.cap
    elif args.cap is not None:
        if args.cap > len(REFERENCE_H2) - 1:
            raise UsageError(f"--cap {args.cap} needs an explicit --h2 with {args.cap + 1} weights")
        overrides["distance_cap"] = args.cap
        overrides["h2_table"] = REFERENCE_H2[: args.cap + 1]
    try:
        return replace(hp, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _catalog(args):
    return load_catalog(args.catalog) if args.catalog else reference_catalog()


def _read_sets(path: str, catalog, threshold: float):
    if path == "-":
        sets = parse_detections(sys.stdin.buffer, catalog)
    else:
        with open(path, "rb") as fh:
            sets = parse_detections(fh, catalog)
    return [filter_by_score(s, threshold) for s in sets]


def _read_fp(path: str, key: str = "") -> SVMF:
    data = Path(path).read_bytes()
    if data.startswith(b"SVMF"):
        fp = decode_svmf(data)
        return SVMF(fp.n, fp.entries, key)
    return loads_json(data.decode("utf-8"), key)


def _safe_name(key: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", key) or "_"


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def cmd_fingerprint(args) -> int:
    _require(args, "input", "out")
    hp = hyperparams_from_args(args)
    catalog = _catalog(args)
    sets = _read_sets(args.input, catalog, args.score_threshold)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in sets:
        fp = compute_svmf(build_graph(s, hp.expansion_factor), catalog, hp)
        name = _safe_name(s.image_key)
        if args.format == "json":
            atomic_write_bytes(out / f"{name}.svmf.json", (dumps_json(fp) + "\n").encode())
        else:
            atomic_write_bytes(out / f"{name}.svmf", encode_svmf(fp))
        print(f"{s.image_key}\t{len(fp)}")
    return EXIT_OK


def cmd_index(args) -> int:
    _require(args, "out")
    if not args.input and not args.fp:
        raise UsageError("give detection JSONL via --in and/or fingerprint files via --fp")
    hp = hyperparams_from_args(args)
    catalog = _catalog(args)
    idx = FingerprintIndex(catalog.n)
    for path in args.input or []:
        for s in _read_sets(path, catalog, args.score_threshold):
            idx.add(s.image_key, compute_svmf(build_graph(s, hp.expansion_factor), catalog, hp))
    for path in args.fp or []:
        name = Path(path).name
        key = re.sub(r"\.svmf(\.json)?$", "", name)
        idx.add(key, _read_fp(path, key))
    index_save(idx, args.out)
    print(f"indexed {len(idx)} fingerprints (n={idx.n}) -> {args.out}")
    return EXIT_OK


def cmd_search(args) -> int:
    idx = index_load(args.index)
    query = _read_fp(args.query)
    print("rank\tkey\tscore")
    for r in idx.search(query, args.k):
        print(f"{r.rank}\t{r.key}\t{r.score!r}")
    return EXIT_OK


def cmd_rank(args) -> int:
    idx = index_load(args.index)
    query = _read_fp(args.query)
    print(idx.rank_of(query, args.target))
    return EXIT_OK


def _emit(report: dict, table: str, args) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        atomic_write_bytes(args.out, text.encode())
    sys.stdout.write(text if args.json else table)


def cmd_eval_detect(args) -> int:
    with open(args.input, "rb") as fh:
        records = parse_eval_records(fh)
    if not records:
        raise ValueError("evaluation file contains no records")
    s_f1, m_em = aggregate_detection_report(records)
    report = {
        "records": len(records),
        "s_f1_macro": s_f1,
        "m_em": m_em,
        "per_record": [{"molecule_key": r.molecule_key, "s_f1": r.f1} for r in records],
    }
    table = (
        f"{'records':<18}{len(records):>10}\n"
        f"{'S-F1 (macro, %)':<18}{s_f1:>10.1f}\n"
        f"{'M-EM (%)':<18}{m_em:>10.1f}\n"
    )
    _emit(report, table, args)
    return EXIT_OK


def cmd_eval_retrieval(args) -> int:
    catalog = _catalog(args)
    if args.bundle:
        bench = load_bundle(args.bundle, catalog)
        if args.score_threshold > 0:
            bench.levels = [[filter_by_score(s, args.score_threshold) for s in sets] for sets in bench.levels]
        if not bench.queries:
            raise ValueError("bundle has no queries")
        hp = hyperparams_from_args(args, hyperparams_from_manifest(bench.manifest))
        levels = evaluate_benchmark(bench, catalog, hp)
        report = {"bundle": str(args.bundle), "levels": levels}
        rows = [f"{'level':<10}{'index':>8}{'queries':>9}{'avg rank':>10}"]
        rows += [
            f"{lv['level']:<10}{lv['index_size']:>8}{lv['queries']:>9}{lv['average_rank']:>10.2f}" for lv in levels
        ]
    else:
        _require(args, "index", "queries")
        idx = index_load(args.index)
        with open(args.queries, "rb") as fh:
            queries = parse_queries(fh)
        if not queries:
            raise ValueError("query file contains no queries")
        ranks = [idx.rank_of(q, t) for q, t in queries]
        report = {
            "index_size": len(idx),
            "queries": len(queries),
            "average_rank": average_rank(queries, idx),
            "ranks": ranks,
        }
        rows = [f"{'queries':<14}{len(queries):>10}", f"{'average rank':<14}{report['average_rank']:>10.2f}"]
    _emit(report, "\n".join(rows) + "\n", args)
    return EXIT_OK


def _parse_levels(text: str) -> list[PerturbationParams]:
    if text == "reference":
        return list(REFERENCE_LEVELS)
    if text == "identity":
        return [IDENTITY]
    levels = []
    for chunk in text.split(";"):
        try:
            drop, sub, jitter = (float(x) for x in chunk.split(","))
        except ValueError:
            raise UsageError(f"level {chunk!r} is not 'drop,substitute,jitter'") from None
        try:
            levels.append(PerturbationParams(drop, sub, jitter))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return levels


def cmd_gen(args) -> int:
    _require(args, "out")
    hp = hyperparams_from_args(args)
    catalog = _catalog(args)
    levels = _parse_levels(args.levels)
    spec = default_spec(
        catalog,
        count_range=(args.count_min, args.count_max),
        canvas=(args.canvas, args.canvas),
        mean_box_size=args.box_size,
        overlap_density=args.density,
    )
    bench = build_benchmark(args.bases, args.variants, levels, args.seed, catalog, spec, hp)
    write_bundle(bench, args.out)
    print(f"wrote {len(bench.queries)} queries and {len(levels)} index levels to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svmf", description="Substructure-graph visual molecular fingerprints")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fingerprint", help="detection JSONL -> one fingerprint file per image")
    _common(p)
    p.add_argument("--in", dest="input", help="detection JSONL ('-' for stdin)")
    p.add_argument("--format", choices=("bin", "json"), default="bin")
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("index", help="build an index file from detections and/or fingerprint files")
    _common(p)
    p.add_argument("--in", dest="input", action="append", help="detection JSONL (repeatable)")
    p.add_argument("--fp", action="append", help="fingerprint file, binary or JSON (repeatable)")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="top-k entries of an index for a query fingerprint")
    _common(p)
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True, help="query fingerprint file")
    p.add_argument("-k", "--k", type=int, default=10)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("rank", help="rank of one target key for a query fingerprint")
    _common(p)
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval-detect", help="S-F1 and M-EM over an evaluation JSONL")
    _common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--json", action="store_true", help="print the JSON report instead of the table")
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("eval-retrieval", help="average target rank for a bundle or index + query list")
    _common(p)
    p.add_argument("--bundle")
    p.add_argument("--index")
    p.add_argument("--queries", help="query list JSONL")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("gen", help="generate a synthetic retrieval bundle")
    _common(p)
    p.add_argument("--bases", type=int, default=20)
    p.add_argument("--variants", type=int, default=5)
    p.add_argument("--levels", default="reference", help="'reference', 'identity' or 'd,s,j;d,s,j;...'")
    p.add_argument("--count-min", type=int, default=6)
    p.add_argument("--count-max", type=int, default=14)
    p.add_argument("--canvas", type=float, default=512.0)
    p.add_argument("--box-size", type=float, default=40.0)
    p.add_argument("--density", type=float, default=0.85)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"svmf {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"svmf {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
