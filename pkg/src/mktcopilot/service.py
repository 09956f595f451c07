"""HTTP face of the engine. Routes mirror the CLI one to one."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .corpus import EmptyDocument, FetchError
from .engine import CopilotEngine, RebuildInProgress, UnknownSession, UnknownTrace, load_questions_file
from .errors import ConfigError, RangeError
from .gateway import GatewayError, ReplayMiss, ScriptGap
from .judge import EvalError
from .qa import IndexNotBuilt
from .reports import render_machine
from .sqlkit import DatasetError


class DocumentIn(BaseModel):
    url: str | None = None
    text: str | None = None
    doc_id: str | None = None


class MessageIn(BaseModel):
    text: str
    attachment_csv: str | None = None


class SqlEvalIn(BaseModel):
    dataset: str
    model: str
    shots: int | None = None
    eval_count: int | None = None
    seed: int = 20240101
    lenient: bool = False


class TableEvalIn(BaseModel):
    n: int
    seed: int
    model: str
    format: str = "csv"
    strict: bool = False
    stratified: bool = False


class QaEvalIn(BaseModel):
    questions: str | list[dict]
    candidates: list[str]
    judge: str
    k: int | None = None


def _report_body(report) -> dict:
    return {
        "run_id": report.run_id,
        "kind": report.kind,
        "metrics": report.metrics,
        "items": report.items,
        "config": report.config,
        "transcript": report.transcript,
    }


def create_app(engine: CopilotEngine) -> FastAPI:
    app = FastAPI(title="mktcopilot", version="0.1.0")
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    @app.exception_handler(ConfigError)
    @app.exception_handler(DatasetError)
    @app.exception_handler(RangeError)
    @app.exception_handler(FetchError)
    @app.exception_handler(EmptyDocument)
    @app.exception_handler(EvalError)
    async def _bad_request(request: Request, exc: Exception):
        return JSONResponse(status_code=400,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(UnknownSession)
    @app.exception_handler(UnknownTrace)
    async def _not_found(request: Request, exc: Exception):
        return JSONResponse(status_code=404,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(RebuildInProgress)
    async def _conflict(request: Request, exc: Exception):
        return JSONResponse(status_code=409,
                            content={"error": "RebuildInProgress", "detail": str(exc)})

    @app.exception_handler(GatewayError)
    @app.exception_handler(ReplayMiss)
    @app.exception_handler(ScriptGap)
    async def _bad_gateway(request: Request, exc: Exception):
        return JSONResponse(status_code=502,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(IndexNotBuilt)
    async def _index_missing(request: Request, exc: Exception):
        return JSONResponse(status_code=503,
                            content={"error": "IndexNotBuilt", "detail": str(exc)})

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "index_built": engine.index is not None,
            "degraded_endpoints": engine.degraded,
        }

    @app.post("/v1/corpus/documents")
    def add_document(body: DocumentIn):
        if bool(body.url) == bool(body.text):
            raise ConfigError("provide exactly one of url or text")
        return engine.add_document(body.url or body.text, body.doc_id)

    @app.post("/v1/index/rebuild")
    def rebuild_index():
        return engine.rebuild_index()

    @app.post("/v1/sessions")
    def create_session():
        return {"session_id": engine.create_session()}

    @app.post("/v1/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageIn):
        result = engine.handle_message(session_id, body.text, body.attachment_csv)
        return {
            "answer": result.answer,
            "intent": result.intent.kind,
            "intent_source": result.intent.source,
            "trace_id": result.trace_id,
        }

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = engine.get_session(session_id)
        return {
            "session_id": session.session_id,
            "turns": [
                {
                    "user_text": t.user_text,
                    "attachment_ref": t.attachment_ref,
                    "answer": t.answer,
                    "trace_id": t.trace_id,
                    "intent": t.intent,
                }
                for t in session.turns
            ],
        }

    @app.get("/v1/traces/{trace_id}")
    def get_trace(trace_id: str):
        trace = engine.get_trace(trace_id)
        return {
            "trace_id": trace.trace_id,
            "steps": [{"kind": s.kind, "payload": s.payload, "ts": s.ts} for s in trace.steps],
        }

    @app.post("/v1/eval/sql")
    def eval_sql(body: SqlEvalIn):
        report = engine.run_sql_eval(body.dataset, body.model, body.shots,
                                     body.eval_count, body.seed, body.lenient)
        return _report_body(report)

    @app.post("/v1/eval/table")
    def eval_table(body: TableEvalIn):
        report = engine.run_table_eval(body.n, body.seed, body.model, body.format,
                                       body.strict, body.stratified)
        return _report_body(report)

    @app.post("/v1/eval/qa")
    def eval_qa(body: QaEvalIn):
        questions = body.questions
        if isinstance(questions, str):
            questions = load_questions_file(questions)
        report = engine.run_qa_eval(questions, body.candidates, body.judge, body.k)
        return _report_body(report)

    @app.get("/v1/reports/{run_id}")
    def get_report(run_id: str, format: str = "json"):
        report = engine.reports.load(run_id)
        if report is None:
            raise HTTPException(status_code=404,
                                detail={"error": "UnknownReport", "run_id": run_id})
        if format == "records":
            return JSONResponse(content={"records": render_machine(report)})
        return _report_body(report)

    ui_dir = engine.config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        ui_path = Path(ui_dir)

        @app.get("/ui")
        def ui_index():
            return FileResponse(ui_path / "index.html")

        @app.get("/ui/{asset:path}")
        def ui_asset(asset: str):
            target = (ui_path / asset).resolve()
            if not str(target).startswith(str(ui_path.resolve())) or not target.is_file():
                raise HTTPException(status_code=404, detail="not found")
            return FileResponse(target)

    return app
