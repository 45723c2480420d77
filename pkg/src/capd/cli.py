"""Command-line entry point: run scenarios, query, validate and explain knowledge graphs.

Exit codes: 0 ok, 1 validation violations, 2 scenario errors, 3 parse errors,
4 triple not derivable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .ontology import builtin_schema, shapes_from_config, validate
from .ontology.shapes import ShapeError
from .policy import BandwidthStageConfig, ObservationRecord, mitigation_fixture
from .policy.engine import observation_triples, operational_vocabulary, response_fixture
from .rdf_core import DEFAULT_PREFIXES, Graph, Literal, RDFSyntaxError, parse_turtle, serialize_turtle
from .reasoner import KnowledgeBase, TMSError, format_term, parse_rules
from .sim import BUNDLED, ScenarioError, load_scenario, run_scenario
from .sparql import evaluate, format_value, parse_query

EXIT_OK, EXIT_VIOLATIONS, EXIT_SCENARIO, EXIT_PARSE, EXIT_NOT_FOUND = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str, code: int = EXIT_PARSE) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(code, f"{path}: {exc.strerror or exc}") from None


def _load_graph(path: str) -> Graph:
    try:
        return parse_turtle(_read(path), base_prefixes=DEFAULT_PREFIXES)
    except RDFSyntaxError as exc:
        raise _Fail(EXIT_PARSE, f"{path}: {exc}") from None


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_run(args) -> int:
    seed = args.seed
    if seed is None and os.environ.get("CAPD_SEED"):
        try:
            seed = int(os.environ["CAPD_SEED"])
        except ValueError:
            raise _Fail(EXIT_SCENARIO, f"CAPD_SEED must be an integer, got {os.environ['CAPD_SEED']!r}")
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        raise _Fail(EXIT_SCENARIO, "\n".join(f"scenario error: {i}" for i in exc.issues)) from None
    if args.ticks is not None and args.ticks <= 0:
        raise _Fail(EXIT_SCENARIO, "--ticks must be positive")
    log = run_scenario(scenario, seed=seed, ticks=args.ticks)
    _write(log.to_jsonl() if args.format == "jsonl" else log.to_text(), args.out)
    if args.verbose:
        summary = log.summary
        print(f"{scenario.name}: {summary['delivered']}/{summary['deliveries']} deliveries, "
              f"codes {', '.join(summary['distinct_codes'])}", file=sys.stderr)
    return EXIT_OK


def cmd_query(args) -> int:
    g = _load_graph(args.kg)
    try:
        q = parse_query(_read(args.query), g.prefixes)
    except RDFSyntaxError as exc:
        raise _Fail(EXIT_PARSE, f"{args.query}: {exc}") from None
    rows = evaluate(q, g)
    names = q.output_names
    if args.format == "jsonl":
        _write("".join(json.dumps({n: format_value(r[n]) for n in names}, separators=(",", ":")) + "\n"
                       for r in rows), None)
        return EXIT_OK
    cells = [[r[n].lexical if isinstance(r[n], Literal) else format_term(r[n], g.prefixes)
              for n in names] for r in rows]
    widths = [max([len(n)] + [len(c[i]) for c in cells]) for i, n in enumerate(names)]
    lines = ["  ".join(n.ljust(w) for n, w in zip(names, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    print("\n".join(lines))
    print(f"({len(rows)} row{'s' if len(rows) != 1 else ''})", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    g = _load_graph(args.kg)
    schema = builtin_schema()
    shapes = None
    if args.shapes:
        try:
            shapes = shapes_from_config(json.loads(_read(args.shapes)), g.prefixes)
        except (ShapeError, json.JSONDecodeError) as exc:
            raise _Fail(EXIT_PARSE, f"{args.shapes}: {exc}") from None
    violations = validate(g, schema, shapes)
    for v in violations:
        print(v.message)
    if violations:
        print(f"{len(violations)} violation(s)", file=sys.stderr)
        return EXIT_VIOLATIONS
    print("conforms", file=sys.stderr)
    return EXIT_OK


def cmd_explain(args) -> int:
    g = _load_graph(args.kg)
    text = " ".join(args.triple)
    try:
        parsed = parse_turtle(text.rstrip().rstrip(".") + " .", base_prefixes=g.prefixes)
    except RDFSyntaxError as exc:
        raise _Fail(EXIT_PARSE, f"triple argument: {exc}") from None
    if len(parsed) != 1:
        raise _Fail(EXIT_PARSE, "the triple argument must be exactly one triple: subject predicate object")
    (target,) = list(parsed)
    kb = KnowledgeBase()
    if args.rules:
        try:
            for rule in parse_rules(_read(args.rules), g.prefixes):
                kb.add_rule(rule)
        except RDFSyntaxError as exc:
            raise _Fail(EXIT_PARSE, f"{args.rules}: {exc}") from None
    kb.assert_all(builtin_schema())
    kb.assert_all(g)
    kb.forward_chain()
    try:
        proof = kb.explain(target)
    except TMSError:
        raise _Fail(EXIT_NOT_FOUND, f"not derivable: {text}") from None
    print(proof.render(g.prefixes))
    return EXIT_OK


def cmd_fixture(args) -> int:
    """Write the schema, the mitigation fixture and optional observations as Turtle."""
    g = Graph(prefixes=dict(DEFAULT_PREFIXES))
    for t in builtin_schema():
        g.insert(t)
    for t in mitigation_fixture(BandwidthStageConfig.default()):
        g.insert(t)
    if args.responses:
        for t in operational_vocabulary() + response_fixture():
            g.insert(t)
    for tick, value in enumerate(args.observations or [], start=1):
        for t in observation_triples(ObservationRecord(args.asset, tick, "bandwidth_mbps", value)):
            g.insert(t)
    _write(serialize_turtle(g), args.out)
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name in BUNDLED:
        print(name)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _floats(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("bandwidth values must be >= 0")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a bundled scenario (by name) or a scenario JSON file")
    run.add_argument("scenario", help=f"one of {', '.join(BUNDLED)} or a path")
    run.add_argument("--format", choices=("text", "jsonl"), default="text")
    run.add_argument("--out", help="write the event log here instead of stdout")
    run.add_argument("--seed", type=int, help="override the scenario seed (and CAPD_SEED)")
    run.add_argument("--ticks", type=int, help="stop after this many ticks")
    run.set_defaults(func=cmd_run)

    q = sub.add_parser("query", help="evaluate a SELECT query over a Turtle file")
    q.add_argument("kg")
    q.add_argument("query")
    q.add_argument("--format", choices=("text", "jsonl"), default="text")
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("validate", help="check a Turtle file against the shapes")
    v.add_argument("kg")
    v.add_argument("--shapes", help="JSON shapes file replacing the default shapes")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("explain", help="print the proof tree of a triple after chaining")
    e.add_argument("kg")
    e.add_argument("triple", nargs="+", help="subject predicate object, Turtle syntax")
    e.add_argument("--rules", help="extra rule file to load beside the builtin rules")
    e.set_defaults(func=cmd_explain)

    f = sub.add_parser("fixture", help="write the schema plus mitigation fixture as Turtle")
    f.add_argument("--observations", type=_floats, help="bandwidth values for ticks 1..n, e.g. 7.5,3.0")
    f.add_argument("--asset", default="Asset_A")
    f.add_argument("--responses", action="store_true", help="include detection response chains")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fixture)

    s = sub.add_parser("scenarios", help="list bundled scenarios")
    s.set_defaults(func=cmd_scenarios)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"capd {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
