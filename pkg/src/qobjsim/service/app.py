"""HTTP front end over :class:`JobManager`."""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from ..model.wire import ParseError, serialize
from ..registry import UnknownBackend, builtin_names
from .jobs import JobManager, NotReady, RejectedSubmission, UnknownJob

DATA_DIR_ENV = "QOBJSIM_DATA_DIR"
PORT_ENV = "QOBJSIM_PORT"
DOCUMENTS = ("configuration", "properties", "defaults", "status", "schema")


def _json(obj, status: int = 200) -> Response:
    return Response(serialize(obj), status_code=status, media_type="application/json")


def _error(status: int, kind: str, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": kind, "message": message, **extra}, status_code=status)


def create_app(manager: JobManager | None = None) -> FastAPI:
    manager = manager or JobManager(os.environ.get(DATA_DIR_ENV))
    app = FastAPI(title="qobjsim")
    app.state.manager = manager

    @app.exception_handler(UnknownBackend)
    async def _unknown_backend(request, exc):
        return _error(404, "UnknownBackend", f"no backend named {exc.args[0]!r}")

    @app.exception_handler(UnknownJob)
    async def _unknown_job(request, exc):
        return _error(404, "UnknownJob", f"no job {exc.args[0]!r}")

    @app.exception_handler(NotReady)
    async def _not_ready(request, exc):
        return _error(409, "NotReady", str(exc))

    @app.get("/v1/backends")
    def list_backends():
        names = sorted(set(builtin_names()) | set(manager.backends))
        return _json([manager.backend(n).raw.get("configuration") or manager.backend(n).configuration
                      for n in names])

    @app.get("/v1/backends/{name}/jobs")
    def list_jobs(name: str, status: str | None = None, since: str | None = None):
        return _json(manager.list_jobs(name, status=status, since=since))

    @app.get("/v1/backends/{name}/{document}")
    def backend_document(name: str, document: str):
        if document not in DOCUMENTS:
            return _error(404, "UnknownDocument", f"backends expose {', '.join(DOCUMENTS)}")
        if document == "status":
            return _json(manager.backend_status(name))
        b = manager.backend(name)
        value = {"configuration": b.configuration, "properties": b.properties,
                 "defaults": b.defaults, "schema": b.schema or None}[document]
        if value is None:
            return _error(404, "NotProvided", f"backend {name} has no {document}")
        return _json(value)

    @app.post("/v1/backends/{name}/jobs")
    async def submit(name: str, request: Request):
        body = await request.body()
        try:
            job_id = manager.submit(name, body)
        except ParseError as exc:
            return _error(422, "RejectedSubmission", str(exc),
                          violations=[{"path": exc.path, "message": exc.reason, "severity": "error"}])
        except RejectedSubmission as exc:
            return _error(422, "RejectedSubmission", str(exc), violations=exc.report.to_json())
        return _json({"job_id": job_id}, status=201)

    @app.get("/v1/jobs/{job_id}/status")
    def job_status(job_id: str):
        return _json(manager.status(job_id))

    @app.post("/v1/jobs/{job_id}/cancel")
    def cancel(job_id: str):
        return _json(manager.cancel(job_id))

    @app.get("/v1/jobs/{job_id}/result")
    def result(job_id: str, chunk: int | None = None):
        if chunk is not None and chunk < 1:
            return _error(422, "BadChunk", "chunk must be a positive shot count")
        return Response(manager.result_bytes(job_id, chunk), media_type="application/json")

    return app


def serve(host: str = "127.0.0.1", port: int | None = None, data_dir: str | None = None):
    import uvicorn

    manager = JobManager(data_dir or os.environ.get(DATA_DIR_ENV))
    uvicorn.run(create_app(manager), host=host, port=port or int(os.environ.get(PORT_ENV, "8000")))
