"""Command line interface.

Verbs:
  plan   — plan a composition against a catalog bundle (exit 0 plan,
           3 no plan, 1 error)
  merge  — open/inspect/decide/finalize/pivot merge sessions stored as files
  sim    — run the workload simulator and emit a CSV/JSON report
  serve  — run the HTTP service
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import merger, sim
from .composer import compose, plan_to_dict
from .errors import PrecomposeError
from .files import load_catalog_bundle, load_ontology, load_request, ontology_format_for
from .ontology import Iri, serialize_ontology

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_PLAN = 3


def _write_json(doc, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_session(path: str) -> merger.MergeSession:
    return merger.session_from_dict(json.loads(Path(path).read_text("utf-8")))


def _save_session(session: merger.MergeSession, path: str) -> None:
    Path(path).write_bytes(merger.serialize_session(session))


def _cmd_plan(args: argparse.Namespace) -> int:
    catalog, _ = load_catalog_bundle(args.catalog)
    request = load_request(args.request)
    plan = compose(catalog, request, max_depth=args.depth)
    if plan is None:
        print("no composition found", file=sys.stderr)
        return EXIT_NO_PLAN
    _write_json(plan_to_dict(plan), args.out)
    return EXIT_OK


def _cmd_merge_open(args: argparse.Namespace) -> int:
    left = load_ontology(args.left)
    right = load_ontology(args.right)
    session = merger.open_session(
        left, right, theta_name=args.theta_name, theta_struct=args.theta_struct
    )
    _save_session(session, args.session)
    print(f"session {session.session_id}: {len(session.pending)} suggestion(s) pending")
    return EXIT_OK


def _cmd_merge_suggestions(args: argparse.Namespace) -> int:
    session = _load_session(args.session)
    _write_json([merger.suggestion_to_dict(s) for s in session.pending], None)
    return EXIT_OK


def _iter_decisions(args: argparse.Namespace):
    if args.stdin:
        payload = json.load(sys.stdin)
        entries = payload["decisions"] if isinstance(payload, dict) else payload
        for entry in entries:
            yield merger.decision_from_dict(entry)
    elif args.decisions:
        payload = json.loads(Path(args.decisions).read_text("utf-8"))
        entries = payload["decisions"] if isinstance(payload, dict) else payload
        for entry in entries:
            yield merger.decision_from_dict(entry)
    else:
        if args.suggestion is None or args.verdict is None:
            raise PrecomposeError("decide needs --suggestion/--verdict, --decisions, or --stdin")
        yield merger.MergeDecision(
            suggestion_id=args.suggestion,
            verdict=merger.Verdict(args.verdict.replace("-", "_")),
            new_name=args.name,
        )


def _cmd_merge_decide(args: argparse.Namespace) -> int:
    session = _load_session(args.session)
    for decision in _iter_decisions(args):
        session = merger.apply_decision(session, decision)
    _save_session(session, args.session)
    print(f"session {session.session_id}: {len(session.pending)} suggestion(s) pending")
    return EXIT_OK


def _cmd_merge_finalize(args: argparse.Namespace) -> int:
    session = _load_session(args.session)
    session, merged = merger.finalize(session)
    _save_session(session, args.session)
    out = Path(args.out)
    fmt = ontology_format_for(out)
    out.write_bytes(serialize_ontology(merged, fmt))
    print(f"merged ontology written to {out}")
    return EXIT_OK


def _cmd_merge_pivot(args: argparse.Namespace) -> int:
    ontology = load_ontology(args.ontology)
    links = {Iri(k): v for k, v in json.loads(args.links).items()}
    pivoted = merger.pivot_by_property(
        ontology, Iri(args.property), links, start_index=args.start_index
    )
    out = Path(args.out)
    out.write_bytes(serialize_ontology(pivoted, ontology_format_for(out)))
    print(f"pivoted ontology written to {out}")
    return EXIT_OK


def _cmd_sim(args: argparse.Namespace) -> int:
    if args.config:
        cfg = sim.config_from_dict(json.loads(Path(args.config).read_text("utf-8")))
    else:
        cfg = sim.SimConfig()
    report = sim.run_sim(cfg)
    sim.emit_report(report, args.out, format=args.format)
    print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from .api import serve

    serve(args.store, args.catalog, bind=args.bind, frontend_dir=args.frontend)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="precompose", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan a composition")
    p_plan.add_argument("--catalog", required=True)
    p_plan.add_argument("--request", required=True)
    p_plan.add_argument("--depth", type=int, default=6)
    p_plan.add_argument("--out", default=None, help="output path (default stdout)")
    p_plan.set_defaults(func=_cmd_plan)

    p_merge = sub.add_parser("merge", help="merge session operations")
    merge_sub = p_merge.add_subparsers(dest="merge_command", required=True)

    m_open = merge_sub.add_parser("open")
    m_open.add_argument("--left", required=True)
    m_open.add_argument("--right", required=True)
    m_open.add_argument("--session", required=True, help="session file to create")
    m_open.add_argument("--theta-name", type=float, default=merger.THETA_NAME)
    m_open.add_argument("--theta-struct", type=float, default=merger.THETA_STRUCT)
    m_open.set_defaults(func=_cmd_merge_open)

    m_sugg = merge_sub.add_parser("suggestions")
    m_sugg.add_argument("--session", required=True)
    m_sugg.set_defaults(func=_cmd_merge_suggestions)

    m_decide = merge_sub.add_parser("decide")
    m_decide.add_argument("--session", required=True)
    m_decide.add_argument("--suggestion", type=int, default=None)
    m_decide.add_argument(
        "--verdict", choices=["accept", "reject", "create-new"], default=None
    )
    m_decide.add_argument("--name", default=None, help="class name for create-new")
    m_decide.add_argument("--decisions", default=None, help="JSON decision list file")
    m_decide.add_argument(
        "--stdin", action="store_true", help="read a JSON decision list from stdin"
    )
    m_decide.set_defaults(func=_cmd_merge_decide)

    m_final = merge_sub.add_parser("finalize")
    m_final.add_argument("--session", required=True)
    m_final.add_argument("--out", required=True, help="merged ontology output path")
    m_final.set_defaults(func=_cmd_merge_finalize)

    m_pivot = merge_sub.add_parser("pivot")
    m_pivot.add_argument("--ontology", required=True)
    m_pivot.add_argument("--property", required=True)
    m_pivot.add_argument("--links", required=True, help='JSON map, e.g. {"#EBOOKS": "hasEbook"}')
    m_pivot.add_argument("--start-index", type=int, default=1)
    m_pivot.add_argument("--out", required=True)
    m_pivot.set_defaults(func=_cmd_merge_pivot)

    p_sim = sub.add_parser("sim", help="run the workload simulator")
    p_sim.add_argument("--config", default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--format", choices=["csv", "json"], default="csv")
    p_sim.set_defaults(func=_cmd_sim)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--store", required=True)
    p_serve.add_argument("--catalog", required=True)
    p_serve.add_argument("--bind", default="127.0.0.1:8704")
    p_serve.add_argument("--frontend", default=None, help="static UI bundle directory")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PrecomposeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"IO: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
