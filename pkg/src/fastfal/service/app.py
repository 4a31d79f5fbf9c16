"""FastAPI service wrapping the simulator.

Experiments are submitted as config text and executed on a worker thread;
clients poll run status and fetch the emitted metrics CSV. Small operations
(store generation, inspection) run synchronously.
"""

from __future__ import annotations

import os
import threading
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from ..config import parse_config_text, parse_pairs
from ..datastore import gen_synthetic, load_store, save_store
from ..errors import ConfigError, DataError, FalError
from ..orchestrator import emit_metrics, run_experiment, run_sweep
from .schemas import (
    InspectRequest,
    RunRequest,
    RunStatus,
    RunSummary,
    StoreInfo,
    SweepPoint,
    SweepRequest,
    SyntheticRequest,
)


class RunRegistry:
    """Thread-safe record of submitted runs and their outcomes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._runs: dict[str, RunStatus] = {}

    def create(self) -> str:
        run_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._runs[run_id] = RunStatus(run_id=run_id, state="running")
        return run_id

    def finish(self, run_id: str, summary: RunSummary) -> None:
        with self._lock:
            self._runs[run_id] = RunStatus(run_id=run_id, state="done", summary=summary)

    def fail(self, run_id: str, error: str) -> None:
        with self._lock:
            self._runs[run_id] = RunStatus(run_id=run_id, state="error", error=error)

    def get(self, run_id: str) -> RunStatus | None:
        with self._lock:
            return self._runs.get(run_id)


def _http_error(exc: FalError) -> HTTPException:
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=422, detail=str(exc))
    if isinstance(exc, DataError):
        return HTTPException(status_code=400, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="fastfal", version="0.1.0")
    registry = RunRegistry()
    out_dirs: dict[str, str] = {}

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/synthetic", response_model=StoreInfo)
    def synthetic(req: SyntheticRequest) -> StoreInfo:
        try:
            store = gen_synthetic(req.classes, req.per_class, req.dim, req.sigma, req.seed)
            save_store(store, req.out)
        except FalError as exc:
            raise _http_error(exc) from exc
        return StoreInfo(
            path=req.out, n=store.n, d=store.d, c=store.c,
            class_histogram=[int(x) for x in store.class_histogram()],
        )

    @app.post("/inspect", response_model=StoreInfo)
    def inspect(req: InspectRequest) -> StoreInfo:
        if not os.path.exists(req.path):
            raise HTTPException(status_code=404, detail=f"no such file: {req.path}")
        try:
            store = load_store(req.path)
        except FalError as exc:
            raise _http_error(exc) from exc
        return StoreInfo(
            path=req.path, n=store.n, d=store.d, c=store.c,
            class_histogram=[int(x) for x in store.class_histogram()],
        )

    def _execute(run_id: str, req: RunRequest) -> None:
        try:
            cfg = parse_config_text(req.config_text)
            if req.out_dir:
                cfg.out_dir = req.out_dir
            trace, ledger = run_experiment(cfg)
            if cfg.out_dir:
                emit_metrics(trace, ledger, cfg.out_dir)
                out_dirs[run_id] = cfg.out_dir
            registry.finish(run_id, RunSummary(
                final_acc=trace.final_acc,
                total_mb=ledger.total_mb,
                walltime_s=ledger.walltime_s,
                rounds=trace.round_count,
                budget_consumed=trace.budget_consumed,
                weak_acc_before=trace.weak_acc_before,
                weak_acc_after=trace.weak_acc_after,
            ))
        except Exception as exc:  # surface anything to the poller
            registry.fail(run_id, f"{type(exc).__name__}: {exc}")

    @app.post("/runs", response_model=RunStatus, status_code=202)
    def submit_run(req: RunRequest) -> RunStatus:
        try:  # reject malformed configs before accepting the run
            parse_config_text(req.config_text)
        except FalError as exc:
            raise _http_error(exc) from exc
        run_id = registry.create()
        worker = threading.Thread(target=_execute, args=(run_id, req), daemon=True)
        worker.start()
        return registry.get(run_id)

    @app.get("/runs/{run_id}", response_model=RunStatus)
    def run_status(run_id: str) -> RunStatus:
        status = registry.get(run_id)
        if status is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        return status

    @app.get("/runs/{run_id}/metrics", response_class=PlainTextResponse)
    def run_metrics(run_id: str) -> str:
        status = registry.get(run_id)
        if status is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        if status.state != "done":
            raise HTTPException(status_code=409, detail=f"run is {status.state}")
        out_dir = out_dirs.get(run_id)
        if out_dir is None:
            raise HTTPException(status_code=404, detail="run kept no output directory")
        with open(os.path.join(out_dir, "metrics.csv"), "r", encoding="utf-8") as fh:
            return fh.read()

    @app.post("/sweep", response_model=list[SweepPoint])
    def sweep(req: SweepRequest) -> list[SweepPoint]:
        try:
            pairs = parse_pairs(req.config_text)
            results = run_sweep(pairs, req.param, req.values, req.out_dir)
        except FalError as exc:
            raise _http_error(exc) from exc
        return [SweepPoint(
            value=str(rec["value"]),
            final_acc=float(rec["final_acc"]),
            total_mb=float(rec["total_mb"]),
            rounds=int(rec["rounds"]),
            budget_consumed=int(rec["budget_consumed"]),
        ) for rec in results]

    return app
