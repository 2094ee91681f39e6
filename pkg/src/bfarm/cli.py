"""Command-line front end and benchmark harness.

    bfarm mine --input car --minsup 10% --minconf 75% --mode fixed
    bfarm compare --input tests/fixtures/table3.csv --minsup 10% --minconf 30% --decision G,F
    bfarm build-store --input car --store /tmp/car-store
    bfarm datasets

``--input`` takes a file path or the name of a registered dataset (see
``bfarm datasets``).  Registered datasets come with their own schema; a plain
file is read with a header row and its schema is inferred unless
``--schema`` is given.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import datasets, oracle
from .miner import DEFAULT_CACHE_NODES, bf_arm, rule_to_dict, trees_from_bitmap
from .model import AssociationRule, MiningConfig, ThresholdError, UsageError, parse_threshold
from .schema import (AttributeSchema, ItemCatalog, RawTable, SchemaError, discretize,
                     infer_schema, load_schema_document, read_table, schema_from_dict)
from .store import StoreError, load_store, write_store

log = logging.getLogger("bfarm")

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_NOT_FOUND = 3
EXIT_SCHEMA = 4
EXIT_THRESHOLD = 5
EXIT_STORE = 6

ALGORITHMS = ("bfarm", "apriori")


@dataclass
class AlgorithmRun:
    build_seconds: float
    mine_seconds: float
    itemsets_per_level: list[int]
    counts: dict = field(repr=False)
    rules: list[AssociationRule] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "build_seconds": self.build_seconds,
            "mine_seconds": self.mine_seconds,
            "itemsets_per_level": self.itemsets_per_level,
            "n_itemsets": len(self.counts),
            "n_rules": len(self.rules),
        }


@dataclass
class RunReport:
    dataset: str
    n_rows: int
    n_items: int
    padded_len: int
    config: dict
    runs: dict[str, AlgorithmRun]
    catalog: ItemCatalog = field(repr=False)
    verdict: str | None = None
    differences: list[str] = field(default_factory=list)

    @property
    def rules(self) -> list[AssociationRule]:
        first = next(iter(self.runs.values()))
        return first.rules

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_rows": self.n_rows,
            "n_items": self.n_items,
            "padded_len": self.padded_len,
            "config": self.config,
            "algorithms": {name: run.to_dict() for name, run in self.runs.items()},
            "rules": [rule_to_dict(r, self.catalog) for r in self.rules],
            "verdict": self.verdict,
            "differences": self.differences,
        }


def _elapsed(t0: float) -> float:
    # reports promise strictly positive timings
    return max(time.perf_counter() - t0, 1e-9)


def _levels(counts: dict) -> list[int]:
    out = [0] * max((len(s) for s in counts), default=0)
    for s in counts:
        out[len(s) - 1] += 1
    return out


# -- input --------------------------------------------------------------------

def load_input(spec: str, schema_path=None, data_dir=None) -> tuple[str, RawTable, AttributeSchema]:
    """Resolve ``--input`` to a name, a raw table with numeric columns binned, and a schema."""
    if spec in datasets.REGISTRY and not Path(spec).exists():
        loaded = datasets.load_dataset(spec, data_dir)
        if schema_path is not None:
            doc = load_schema_document(schema_path)
            table = datasets.apply_binning(datasets.validate(loaded.info, loaded.path),
                                           doc.get("binning") or {})
            return spec, table, schema_from_dict(doc)
        return spec, loaded.table, loaded.schema

    path = datasets.fetch_or_validate_dataset(spec, data_dir)
    if schema_path is None:
        table = read_table(path)
        return path.name, table, infer_schema(table)
    doc = load_schema_document(schema_path)
    schema = schema_from_dict(doc)
    table = read_table(path)
    if list(table.header) != schema.names:
        # headerless file: the first line was data
        table = read_table(path, header=schema.names)
    return path.name, datasets.apply_binning(table, doc.get("binning") or {}), schema


def make_config(args, schema: AttributeSchema) -> tuple[AttributeSchema, MiningConfig]:
    minsup = parse_threshold(args.minsup)
    minconf = parse_threshold(args.minconf)
    if args.decision:
        schema = schema.with_decisions(d.strip() for d in args.decision.split(",") if d.strip())
    catalog = ItemCatalog.from_schema(schema)
    decision = catalog.decision_items() if args.mode == "fixed" else frozenset()
    if args.mode == "fixed" and not decision:
        raise UsageError("fixed mode needs a decision attribute (--decision or the schema's roles)")
    config = MiningConfig(minsup, minconf, args.mode, decision, args.max_antecedent)
    return schema, config


# -- pipeline -------------------------------------------------------------------

def run(args) -> RunReport:
    name, table, schema = load_input(args.input, args.schema, args.data_dir)
    schema, config = make_config(args, schema)
    algos = ALGORITHMS if args.algo == "both" else (args.algo,)

    t0 = time.perf_counter()
    bitmap, catalog = discretize(table, schema)
    discretize_seconds = _elapsed(t0)

    runs: dict[str, AlgorithmRun] = {}
    for algo in algos:
        if algo == "bfarm":
            t0 = time.perf_counter()
            trees = trees_from_bitmap(bitmap)
            if args.store:
                write_store(args.store, trees, catalog, bitmap.n_rows)
                trees = load_store(args.store)
            build = discretize_seconds + _elapsed(t0)
            bitmap.reset_reads()
            t0 = time.perf_counter()
            result = bf_arm(trees, bitmap.n_rows, config, threads=args.threads,
                            cache_nodes=args.cache_nodes)
            mine = _elapsed(t0)
            if bitmap.reads:
                raise RuntimeError("the miner read the bitmap table")
            runs[algo] = AlgorithmRun(build, mine, result.levels(), result.counts(),
                                      list(result.rules))
        else:
            t0 = time.perf_counter()
            rows = oracle.transactions(table, catalog)
            build = _elapsed(t0)
            t0 = time.perf_counter()
            counts, rules = oracle.reference_mine(rows, config)
            mine = _elapsed(t0)
            runs[algo] = AlgorithmRun(build, mine, _levels(counts), counts, rules)
        log.info("%s: build %.3fs, mine %.3fs, %d rules", algo, runs[algo].build_seconds,
                 runs[algo].mine_seconds, len(runs[algo].rules))

    echo = {
        "minsup": float(config.minsup),
        "minconf": float(config.minconf),
        "mode": config.mode,
        "decision": sorted({catalog[i].attribute for i in config.decision_items}),
        "max_antecedent": config.max_antecedent,
        "algorithms": list(algos),
        "threads": args.threads,
        "store": str(args.store) if args.store else None,
    }
    report = RunReport(name, bitmap.n_rows, len(catalog), bitmap.padded_len, echo, runs, catalog)
    if len(runs) > 1:
        report.differences = compare_runs(runs, catalog)
        report.verdict = "mismatch" if report.differences else "equal"
    return report


def compare_runs(runs: dict[str, AlgorithmRun], catalog: ItemCatalog) -> list[str]:
    """Human-readable differences between the first run and every other."""
    (ref_name, ref), *others = runs.items()
    out = []
    ref_rules = {(r.key, r.count, r.antecedent_count) for r in ref.rules}
    for name, other in others:
        if other.counts != ref.counts:
            keys = set(ref.counts) ^ set(other.counts)
            keys |= {k for k in set(ref.counts) & set(other.counts)
                     if ref.counts[k] != other.counts[k]}
            for k in sorted(keys)[:20]:
                out.append(f"itemset {{{', '.join(catalog.labels(k))}}}: "
                           f"{ref_name}={ref.counts.get(k)} {name}={other.counts.get(k)}")
        other_rules = {(r.key, r.count, r.antecedent_count) for r in other.rules}
        for tag, diff in ((ref_name, ref_rules - other_rules), (name, other_rules - ref_rules)):
            for (ante, cons), c, base in sorted(diff)[:20]:
                out.append(f"rule only in {tag}: {', '.join(catalog.labels(ante))} -> "
                           f"{catalog[cons].label} ({c}/{base})")
    return out


# -- output -------------------------------------------------------------------

def rule_line(r: AssociationRule, catalog: ItemCatalog) -> str:
    return (f"{', '.join(catalog.labels(r.antecedent))} -> {catalog[r.consequent].label}, "
            f"{float(r.support):.6g}, {float(r.confidence):.6g}")


def render(report: RunReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["antecedent", "consequent", "support", "confidence", "count"])
        for r in report.rules:
            w.writerow([" & ".join(report.catalog.labels(r.antecedent)),
                        report.catalog[r.consequent].label,
                        f"{float(r.support):.6g}", f"{float(r.confidence):.6g}", r.count])
        return buf.getvalue()
    c = report.config
    lines = [
        f"dataset {report.dataset}: {report.n_rows} rows, {report.n_items} items, "
        f"padded to {report.padded_len}",
        f"minsup {c['minsup']:g}, minconf {c['minconf']:g}, mode {c['mode']}"
        + (f", decision {','.join(c['decision'])}" if c["decision"] else ""),
    ]
    for name, rn in report.runs.items():
        lines.append(f"{name}: build {rn.build_seconds:.4f}s, mine {rn.mine_seconds:.4f}s, "
                     f"itemsets per level {rn.itemsets_per_level}, {len(rn.rules)} rules")
    if report.verdict:
        lines.append(f"verdict: {report.verdict}")
        lines.extend(f"  {d}" for d in report.differences)
    lines.append("")
    lines.extend(rule_line(r, report.catalog) for r in report.rules)
    return "\n".join(lines) + "\n"


def emit(text: str, out):
    """Write to ``out`` in one step (temp file plus rename), or to stdout."""
    if not out:
        sys.stdout.write(text)
        return
    out = Path(out)
    fd, tmp = tempfile.mkstemp(dir=out.parent if str(out.parent) else ".", prefix=".bfarm-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# -- commands -------------------------------------------------------------------

def cmd_mine(args) -> int:
    report = run(args)
    emit(render(report, args.format), args.out)
    return EXIT_MISMATCH if report.verdict == "mismatch" else EXIT_OK


def cmd_build_store(args) -> int:
    name, table, schema = load_input(args.input, args.schema, args.data_dir)
    if args.decision:
        schema = schema.with_decisions(d.strip() for d in args.decision.split(",") if d.strip())
    t0 = time.perf_counter()
    bitmap, catalog = discretize(table, schema)
    trees = trees_from_bitmap(bitmap)
    write_store(args.store, trees, catalog, bitmap.n_rows)
    seconds = _elapsed(t0)
    nodes = sum(t.node_count for t in trees)
    emit(f"{name}: wrote {len(trees)} trees ({nodes} nodes, {bitmap.n_rows} rows, "
         f"padded to {bitmap.padded_len}) to {args.store} in {seconds:.3f}s\n", None)
    return EXIT_OK


def cmd_datasets(args) -> int:
    for info in datasets.REGISTRY.values():
        try:
            where = str(datasets.fetch_or_validate_dataset(info.name, args.data_dir))
        except datasets.DatasetNotFound:
            where = f"missing (source: {info.source})"
        except datasets.DatasetError as e:
            where = f"invalid ({e})"
        print(f"{info.name:14s} {'/'.join(map(str, info.rows)):>11s} rows  "
              f"{info.minsup}/{info.minconf}  {where}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bfarm", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, store_required=False):
        sp.add_argument("--input", required=True, help="file path or registered dataset name")
        sp.add_argument("--schema", help="YAML/JSON schema file")
        sp.add_argument("--decision", help="decision attribute(s), comma separated")
        sp.add_argument("--store", required=store_required,
                        help="directory for the persisted trees")
        sp.add_argument("--data-dir", help="where registered datasets are looked up")

    for name, algo in (("mine", "bfarm"), ("compare", "both")):
        sp = sub.add_parser(name, help="mine rules" if name == "mine"
                            else "mine with both algorithms and check they agree")
        common(sp)
        sp.add_argument("--minsup", required=True, help='e.g. "10%%" or 0.10')
        sp.add_argument("--minconf", required=True, help='e.g. "75%%" or 0.75')
        sp.add_argument("--mode", choices=("fixed", "free"), default="fixed")
        sp.add_argument("--algo", choices=("bfarm", "apriori", "both"), default=algo)
        sp.add_argument("--max-antecedent", type=int)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--cache-nodes", type=int, default=DEFAULT_CACHE_NODES,
                        help="node budget for cached intermediate trees")
        sp.add_argument("--out", help="report file (default stdout)")
        sp.add_argument("--format", choices=("json", "csv", "text"), default="text")
        sp.set_defaults(func=cmd_mine)

    sp = sub.add_parser("build-store", help="discretize, build and persist the trees")
    common(sp, store_required=True)
    sp.set_defaults(func=cmd_build_store)

    sp = sub.add_parser("datasets", help="list registered datasets and where they were found")
    sp.add_argument("--data-dir")
    sp.set_defaults(func=cmd_datasets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("bfarm: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except datasets.DatasetNotFound as e:
        code, msg = EXIT_NOT_FOUND, str(e)
    except FileNotFoundError as e:
        code, msg = EXIT_NOT_FOUND, str(e)
    except ThresholdError as e:
        code, msg = EXIT_THRESHOLD, str(e)
    except UsageError as e:
        code, msg = EXIT_USAGE, str(e)
    except StoreError as e:
        code, msg = EXIT_STORE, str(e)
    except (SchemaError, datasets.DatasetError) as e:
        code, msg = EXIT_SCHEMA, str(e)
    print(f"bfarm: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
