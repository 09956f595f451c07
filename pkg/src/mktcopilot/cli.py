"""Command line entry points mirroring the HTTP routes."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .engine import CopilotEngine, load_questions_file
from .reports import render_human, render_machine


def _engine(args) -> CopilotEngine:
    return CopilotEngine(load_config(args.config))


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    if args.corpus:
        config.corpus_dir = args.corpus
    if args.max_tokens:
        config.defaults["max_chunk_tokens"] = args.max_tokens
    engine = CopilotEngine(config)
    origins: list[tuple[str, str]] = []
    if args.urls:
        for line in Path(args.urls).read_text(encoding="utf-8").splitlines():
            url = line.strip()
            if url and not url.startswith("#"):
                origins.append((url, url))
    for text_path in args.text or []:
        path = Path(text_path)
        origins.append((path.stem, path.read_text(encoding="utf-8")))
    stats = engine.ingest(origins)
    print(f"documents: {stats.documents}")
    print(f"chunks: {stats.chunks}")
    for doc_id, message in stats.errors:
        print(f"error {doc_id}: {message}", file=sys.stderr)
    return 0 if not stats.errors else 1


def cmd_rebuild_index(args) -> int:
    engine = _engine(args)
    result = engine.rebuild_index()
    print(f"dimension: {result['dimension']}")
    print(f"count: {result['count']}")
    return 0


def cmd_ask(args) -> int:
    engine = _engine(args)
    answer = engine.qa_agent().answer_question(args.question, k=args.k, endpoint=args.model)
    print(answer.answer)
    if answer.citations:
        print()
        print("citations:")
        for c in answer.citations:
            print(f"  {c.chunk_id}  score={c.score:.4f}")
    return 0


def cmd_chat(args) -> int:
    engine = _engine(args)
    session_id = args.session or engine.create_session()
    attachment = Path(args.attach).read_text(encoding="utf-8") if args.attach else None
    result = engine.handle_message(session_id, args.text, attachment)
    print(result.answer)
    print()
    print(f"session: {session_id}")
    print(f"intent: {result.intent.kind} ({result.intent.source})")
    print(f"trace: {result.trace_id}")
    return 0


def cmd_trace(args) -> int:
    engine = _engine(args)
    trace = engine.get_trace(args.trace_id)
    for step in trace.steps:
        print(f"[{step.kind}] {step.payload}")
    return 0


def cmd_eval_sql(args) -> int:
    engine = _engine(args)
    report = engine.run_sql_eval(args.dataset, args.model, args.shots,
                                 args.eval_count, args.seed, args.lenient)
    _emit(report, args.machine)
    return 0


def cmd_eval_table(args) -> int:
    engine = _engine(args)
    report = engine.run_table_eval(args.n, args.seed, args.model, args.format,
                                   args.strict, args.stratified)
    _emit(report, args.machine)
    return 0


def cmd_judge(args) -> int:
    engine = _engine(args)
    questions = load_questions_file(args.questions)
    report = engine.run_qa_eval(questions, args.candidates.split(","), args.judge, args.k)
    _emit(report, args.machine)
    return 0


def cmd_report(args) -> int:
    engine = _engine(args)
    report = engine.reports.load(args.run_id)
    if report is None:
        print(f"unknown run_id: {args.run_id}", file=sys.stderr)
        return 1
    _emit(report, args.machine)
    return 0


def _emit(report, machine: bool) -> None:
    if machine:
        sys.stdout.write(render_machine(report))
    else:
        print(render_human(report))
        print(f"(machine records: report {report.run_id} --machine)")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    engine = CopilotEngine(config)
    if engine.degraded:
        print(f"degraded endpoints (missing credentials): {', '.join(engine.degraded)}",
              file=sys.stderr)
    uvicorn.run(create_app(engine), host=config.host, port=config.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mktcopilot",
                                     description="Marketing analytics copilot engine")
    parser.add_argument("--config", default=None, help="path to a JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch, chunk, and store documents")
    p.add_argument("--urls", help="file with one URL per line")
    p.add_argument("--text", action="append", help="plain text file (repeatable)")
    p.add_argument("--max-tokens", type=int, default=None,
                   help="override defaults.max_chunk_tokens")
    p.add_argument("--corpus", default=None, help="override corpus directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rebuild-index", help="embed every stored chunk into a fresh index")
    p.set_defaults(func=cmd_rebuild_index)

    p = sub.add_parser("ask", help="one-shot grounded question answering")
    p.add_argument("--question", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("chat", help="send one chat turn through the router")
    p.add_argument("--session", default=None, help="existing session id")
    p.add_argument("--text", required=True)
    p.add_argument("--attach", default=None, help="CSV attachment file")
    p.set_defaults(func=cmd_chat)

    p = sub.add_parser("trace", help="print a turn trace")
    p.add_argument("trace_id")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("eval-sql", help="score SQL generation against a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--eval-count", type=int, default=None)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--machine", action="store_true", help="emit machine records")
    p.set_defaults(func=cmd_eval_sql)

    p = sub.add_parser("eval-table", help="score table explanations on synthetic rows")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=("csv", "list", "text"), default="csv")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_eval_table)

    p = sub.add_parser("judge", help="judged question answering over candidates")
    p.add_argument("--questions", required=True, help="jsonl file of id/question/reference")
    p.add_argument("--candidates", required=True, help="comma-separated endpoint names")
    p.add_argument("--judge", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("report", help="print a stored run report")
    p.add_argument("run_id")
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
