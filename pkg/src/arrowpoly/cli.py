"""Command-line interface.

Exit codes: 0 success, 1 verification disagreement, 2 syntax/validation
error, 3 variant mismatch.  Structured output is JSON tagged with a schema
version; text output is the canonical polynomial grammar.  Results are
byte-identical for a given input regardless of --parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import diagram, moves, poly, ribbon, states, thistlethwaite
from .errors import (
    ArrowPolyError,
    CategoryMismatch,
    DiagramSyntaxError,
    RibbonGraphParseError,
    ValidationError,
    VariantDecorationMismatch,
    VariantMismatch,
)

SCHEMA = "arrowpoly/1"


def _poly_payload(p: poly.Polynomial) -> dict:
    return {"text": p.text(), "terms": p.structured()}


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "structured":
        payload["schema"] = SCHEMA
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def cmd_compute(args) -> int:
    d = diagram.load(args.path)
    variant = states.variant_for(d) if args.variant == "auto" else args.variant
    if variant != states.variant_for(d):
        raise VariantMismatch(
            f"{d.category} diagrams use the {states.variant_for(d)} variant"
        )
    compute = states.BRACKETS[variant] if args.bracket else states.POLYNOMIALS[variant]
    p = compute(d, workers=args.parallelism)
    if args.normalized:
        p = states.normalized(p, d.writhe())
    payload = {
        "command": "compute",
        "variant": variant,
        "writhe": d.writhe(),
        "normalized": bool(args.normalized),
        "bracket": bool(args.bracket),
        "polynomial": _poly_payload(p),
    }
    _emit(args, payload, [p.text()])
    return 0


def cmd_verify(args) -> int:
    d = diagram.load(args.path)
    bits = None if args.all_states or args.state is None else args.state
    report = thistlethwaite.verify(d, bits=bits, workers=args.parallelism)
    payload = {
        "command": "verify",
        "variant": report.variant,
        "all_ok": report.all_ok,
        "states": [
            {
                "state": line.bits,
                "ok": line.ok,
                "direct": _poly_payload(line.expected),
                "graph": _poly_payload(line.got),
            }
            for line in report.lines
        ],
    }
    _emit(args, payload, [report.text()])
    return 0 if report.all_ok else 1


def cmd_graph(args) -> int:
    d = diagram.load(args.path)
    choice = states.choice_from_bits(d, args.state)
    bundle = thistlethwaite.build_graph(d, choice)
    out = ribbon.serialize(bundle.graph)
    payload = {
        "command": "graph",
        "state": args.state,
        "e_plus": bundle.e_plus,
        "e_minus": bundle.e_minus,
        "graph": out,
    }
    _emit(args, payload, [out.rstrip("\n")])
    return 0


def cmd_partial_dual(args) -> int:
    g = ribbon.load(args.path)
    edges = [e for e in args.edges.split(",") if e] if args.edges else []
    dual = ribbon.partial_dual(g, edges)
    out = ribbon.serialize(dual)
    payload = {"command": "partial-dual", "edges": edges, "graph": out}
    _emit(args, payload, [out.rstrip("\n")])
    return 0


def cmd_perturb(args) -> int:
    d = diagram.load(args.path)
    out_d = moves.random_perturb(d, args.steps, args.seed,
                                 crossing_cap=args.crossing_cap)
    out = out_d.serialize()
    payload = {
        "command": "perturb",
        "steps": args.steps,
        "seed": args.seed,
        "writhe": out_d.writhe(),
        "diagram": out,
    }
    _emit(args, payload, [out.rstrip("\n")])
    return 0


def cmd_concat(args) -> int:
    d1 = diagram.load(args.path1)
    d2 = diagram.load(args.path2)
    out_d = d1.concatenate(d2)
    out = out_d.serialize()
    payload = {"command": "concat", "diagram": out}
    _emit(args, payload, [out.rstrip("\n")])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arrowpoly",
        description="Arrow-polynomial invariants of knotoids and the "
                    "subgraph-sum polynomials of their state graphs.",
    )
    parser.add_argument("--format", choices=("text", "structured"),
                        default="text", help="output format")
    parser.add_argument("--parallelism", type=int, default=1, metavar="N",
                        help="worker count for state enumeration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="polynomial of a diagram file")
    p.add_argument("path")
    p.add_argument("--variant", default="auto",
                   choices=("auto", "arrow", "twisted", "loop", "linkoid"))
    p.add_argument("--normalized", action="store_true",
                   help="multiply by (-A^3)^(-writhe)")
    p.add_argument("--bracket", action="store_true",
                   help="keep B and d symbolic")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", help="check the state-graph identity")
    p.add_argument("path")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all-states", action="store_true", default=False)
    g.add_argument("--state", metavar="BITS")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("graph", help="state graph of one smoothing choice")
    p.add_argument("path")
    p.add_argument("--state", required=True, metavar="BITS")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("partial-dual", help="partial dual of a ribbon graph file")
    p.add_argument("path")
    p.add_argument("--edges", default="", metavar="E1,E2,...")
    p.set_defaults(func=cmd_partial_dual)

    p = sub.add_parser("perturb", help="apply a seeded chain of moves")
    p.add_argument("path")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--crossing-cap", type=int, default=9)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("concat", help="concatenate two knotoid files")
    p.add_argument("path1")
    p.add_argument("path2")
    p.set_defaults(func=cmd_concat)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (VariantMismatch, CategoryMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DiagramSyntaxError, ValidationError, RibbonGraphParseError,
            VariantDecorationMismatch, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArrowPolyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
