"""Job records, the lifecycle state machine, persistence and the FIFO worker."""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import Cancelled
from ..model.documents import parse_qobj
from ..model.qobj import JobStatus, ResultDocument
from ..model.validate import ValidationReport
from ..model.wire import ParseError, loads, serialize
from ..registry import Backend, UnknownBackend, get_backend
from ..runner import now_iso, run_qobj
from .chunks import window_result

log = logging.getLogger(__name__)

TRANSITIONS = {
    "QUEUED": {"INITIALIZING", "CANCELLED"},
    "INITIALIZING": {"RUNNING", "ERROR"},
    "RUNNING": {"DONE", "ERROR", "CANCELLED"},
    "DONE": set(),
    "ERROR": set(),
    "CANCELLED": set(),
}
TERMINAL = frozenset(s for s, nxt in TRANSITIONS.items() if not nxt)


class UnknownJob(KeyError):
    pass


class NotReady(RuntimeError):
    pass


class IllegalTransition(RuntimeError):
    pass


class RejectedSubmission(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(str(v) for v in report.errors) or "rejected")
        self.report = report


@dataclass
class JobRecord:
    job_id: str
    backend: str
    qobj: bytes
    state: str = "QUEUED"
    message: str = ""
    submitted: str = ""
    started: str | None = None
    finished: str | None = None
    cursor: int = 0
    seq: int = 0
    history: list = field(default_factory=list)
    result: bytes | None = None
    shot_memory: list | None = None
    cancel_requested: bool = False

    def transition(self, new: str, message: str = ""):
        if new not in TRANSITIONS[self.state]:
            raise IllegalTransition(f"{self.job_id}: {self.state} -> {new}")
        self.history.append((self.state, new))
        self.state = new
        self.message = message

    def meta(self) -> dict:
        return {"job_id": self.job_id, "backend": self.backend, "state": self.state, "message": self.message,
                "submitted": self.submitted, "started": self.started, "finished": self.finished,
                "cursor": self.cursor, "seq": self.seq}


class JobStore:
    """Records in memory, mirrored under ``data_dir/jobs/<id>/`` when a directory is given."""

    def __init__(self, data_dir: str | Path | None = None):
        self.root = Path(data_dir) / "jobs" if data_dir is not None else None
        self.records: dict[str, JobRecord] = {}
        self.lock = threading.RLock()
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._load()

    def _load(self):
        for d in sorted(self.root.iterdir()):
            meta_path = d / "meta.json"
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            rec = JobRecord(meta["job_id"], meta["backend"], (d / "qobj.json").read_bytes(), meta["state"],
                            meta.get("message", ""), meta.get("submitted", ""), meta.get("started"),
                            meta.get("finished"), meta.get("cursor", 0), meta.get("seq", 0))
            if (d / "result.json").is_file():
                rec.result = (d / "result.json").read_bytes()
            if (d / "shots.json").is_file():
                rec.shot_memory = json.loads((d / "shots.json").read_text(encoding="utf-8"))
            self.records[rec.job_id] = rec

    def save(self, rec: JobRecord, qobj: bool = False, result: bool = False):
        if self.root is None:
            return
        d = self.root / rec.job_id
        d.mkdir(exist_ok=True)
        if qobj:
            (d / "qobj.json").write_bytes(rec.qobj)
        if result and rec.result is not None:
            (d / "result.json").write_bytes(rec.result)
            (d / "shots.json").write_text(json.dumps(rec.shot_memory), encoding="utf-8")
        tmp = d / "meta.json.tmp"
        tmp.write_text(json.dumps(rec.meta()), encoding="utf-8")
        tmp.replace(d / "meta.json")


def _run(qobj, backend: Backend, job_id: str, stop):
    out = run_qobj(qobj, backend, job_id=job_id, stop=stop)
    return serialize(out.document), out.shot_memory


class JobManager:
    """Validates submissions, keeps the FIFO queue and drives a worker thread.

    ``executor(qobj, backend, job_id, stop)`` returns ``(result_bytes, shot_memory)``.
    With ``autostart=False`` nothing runs until :meth:`start` or :meth:`step`.
    """

    def __init__(self, data_dir=None, backends=None, executor=None, autostart: bool = True):
        self.store = JobStore(data_dir)
        self.backends = dict(backends or {})
        self.executor = executor or _run
        self.cond = threading.Condition(self.store.lock)
        self.paused = not autostart
        self._thread = None
        self._closing = False
        self._seq = max((r.seq for r in self.store.records.values()), default=0)
        for rec in self.store.records.values():
            if rec.state in ("INITIALIZING", "RUNNING"):
                rec.transition("ERROR", "interrupted by service restart")
                self.store.save(rec)
        if autostart:
            self.start()

    # backends

    def backend(self, name: str) -> Backend:
        if name in self.backends:
            return self.backends[name]
        return get_backend(name)

    def backend_status(self, name: str) -> dict:
        b = self.backend(name)
        with self.cond:
            pending = sum(1 for r in self.store.records.values() if r.backend == name and r.state == "QUEUED")
        status = {k: b.status.get(k) for k in ("backend_name", "backend_version", "operational", "status_msg")}
        status["backend_name"] = status["backend_name"] or b.configuration.backend_name
        status["backend_version"] = status["backend_version"] or b.configuration.backend_version
        status["operational"] = True if status["operational"] is None else status["operational"]
        status["status_msg"] = status["status_msg"] or "active"
        return {"backend_name": status["backend_name"], "backend_version": status["backend_version"],
                "operational": status["operational"], "pending_jobs": pending, "status_msg": status["status_msg"]}

    # jobs

    def submit(self, backend_name: str, body: bytes | str) -> str:
        b = self.backend(backend_name)
        raw = loads(body)
        qobj = parse_qobj(raw)
        report = b.check(raw, qobj)
        if not report.ok:
            raise RejectedSubmission(report)
        with self.cond:
            self._seq += 1
            rec = JobRecord(uuid.uuid4().hex, backend_name, serialize(raw), submitted=now_iso(), seq=self._seq)
            self.store.records[rec.job_id] = rec
            self.store.save(rec, qobj=True)
            self.cond.notify_all()
        return rec.job_id

    def get(self, job_id: str) -> JobRecord:
        rec = self.store.records.get(job_id)
        if rec is None:
            raise UnknownJob(job_id)
        return rec

    def _queue(self) -> list[JobRecord]:
        return sorted((r for r in self.store.records.values() if r.state == "QUEUED"), key=lambda r: r.seq)

    def status(self, job_id: str) -> JobStatus:
        with self.cond:
            rec = self.get(job_id)
            msg = rec.message
            if rec.state == "QUEUED":
                pos = [r.job_id for r in self._queue()].index(job_id)
                msg = f"queue position {pos}"
            return JobStatus(job_id=rec.job_id, status=rec.state, status_msg=msg or rec.state.lower())

    def cancel(self, job_id: str) -> JobStatus:
        with self.cond:
            rec = self.get(job_id)
            if rec.state == "QUEUED":
                rec.transition("CANCELLED", "cancelled while queued")
                rec.finished = now_iso()
                self.store.save(rec)
            elif rec.state in ("INITIALIZING", "RUNNING"):
                rec.cancel_requested = True
        return self.status(job_id)

    def list_jobs(self, backend_name: str, status: str | None = None, since: str | None = None) -> list[JobStatus]:
        self.backend(backend_name)
        with self.cond:
            recs = [r for r in self.store.records.values() if r.backend == backend_name]
            if status is not None:
                recs = [r for r in recs if r.state == status]
            if since is not None:
                recs = [r for r in recs if r.submitted >= since]
            ids = [r.job_id for r in sorted(recs, key=lambda r: r.seq, reverse=True)]
        return [self.status(i) for i in ids]

    def result_bytes(self, job_id: str, chunk: int | None = None) -> bytes:
        with self.cond:
            rec = self.get(job_id)
            if rec.state != "DONE":
                raise NotReady(f"job {job_id} is {rec.state}")
            if chunk is None:
                return rec.result
            doc = ResultDocument.from_json(loads(rec.result))
            results = tuple(window_result(r, rec.shot_memory[i], rec.cursor, chunk)
                            for i, r in enumerate(doc.results))
            rec.cursor = max((r.shots[1] for r in results), default=rec.cursor)
            self.store.save(rec)
            return serialize(doc.replace(results=results))

    # worker

    def step(self) -> str | None:
        """Run the oldest queued job to completion; returns its id, or None when idle."""
        with self.cond:
            queue = self._queue()
            if not queue:
                return None
            rec = queue[0]
            rec.transition("INITIALIZING", "preparing")
            rec.started = now_iso()
            self.store.save(rec)
        self._execute(rec)
        return rec.job_id

    def _execute(self, rec: JobRecord):
        try:
            qobj = parse_qobj(rec.qobj)
            backend = self.backend(rec.backend)
        except (ParseError, UnknownBackend) as exc:
            with self.cond:
                rec.transition("ERROR", str(exc))
                rec.finished = now_iso()
                self.store.save(rec)
            return
        with self.cond:
            rec.transition("RUNNING", "running")
            self.store.save(rec)
        try:
            result, shots = self.executor(qobj, backend, rec.job_id, lambda: rec.cancel_requested)
        except Cancelled:
            with self.cond:
                rec.transition("CANCELLED", "cancelled while running")
                rec.finished = now_iso()
                self.store.save(rec)
            return
        except Exception as exc:  # noqa: BLE001  engine failures end the job, not the worker
            log.exception("job %s failed", rec.job_id)
            with self.cond:
                rec.transition("ERROR", f"{type(exc).__name__}: {exc}")
                rec.finished = now_iso()
                self.store.save(rec)
            return
        with self.cond:
            rec.result, rec.shot_memory = result, shots
            rec.finished = now_iso()
            rec.transition("DONE", "completed")
            self.store.save(rec, result=True)

    def start(self):
        with self.cond:
            self.paused = False
            if self._thread is None:
                self._thread = threading.Thread(target=self._loop, name="qobjsim-worker", daemon=True)
                self._thread.start()
            self.cond.notify_all()

    def pause(self):
        with self.cond:
            self.paused = True

    def _loop(self):
        while True:
            with self.cond:
                while not self._closing and (self.paused or not self._queue()):
                    self.cond.wait(timeout=0.5)
                if self._closing:
                    return
            self.step()

    def close(self):
        with self.cond:
            self._closing = True
            self.cond.notify_all()
        if self._thread is not None:
            self._thread.join(timeout=5)
