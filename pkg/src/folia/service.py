"""HTTP service exposing the report builders.

Every endpoint accepts a small pydantic request model and returns a
:class:`ReportResponse` whose ``entries`` mirror the pass/fail lines of the
underlying report; the full report payload rides along in ``data``.
Requests that carry a scene send the scene file text verbatim.
"""

from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import reports
from .errors import FoliaError, SceneError
from .scenes import load_scene

__all__ = ["app", "create_app", "ReportResponse"]


class SceneRequest(BaseModel):
    scene_text: str = Field(description="scene file content, schema version 1")
    resolution: Optional[List[int]] = None
    eps0: Optional[float] = None
    seed: Optional[int] = None


class GvsRequest(SceneRequest):
    s: List[int] = Field(description="wedge exponents (s_0 .. s_q), |s| = q")


class VaryRequest(SceneRequest):
    case: str = Field("iii", pattern="^(i|ii|iii)$")
    count: int = Field(3, ge=1, le=8)
    fd_step: float = 1e-3


class CriticalRequest(SceneRequest):
    lam: Optional[float] = Field(None, description="multiplier; None checks plain criticality")


class IndexRequest(SceneRequest):
    pairs: int = Field(10, ge=1, le=32)


class ReebSolveRequest(BaseModel):
    ode: str = Field("cond2", pattern="^(cond2|cond3|reduced)$")
    A0: float = 1.0
    A1: float = 0.25
    A2: float = 0.0
    A3: float = 0.0
    lam: float = 0.0
    tildeA0: float = 0.5
    rtol: float = 1e-10


class ReebFamilyRequest(BaseModel):
    A0: float = 1.0
    A2: float = 0.0
    A1_list: List[float] = Field(default=[0.125, 0.25, 0.375, 0.5, 0.625])
    rtol: float = 1e-10


class BottRequest(BaseModel):
    lams: List[List[float]] = Field(
        description="weights as [re, im] pairs; q+1 of them"
    )


class HoloCheckRequest(BaseModel):
    lam0: float = 1.0
    lam1: float = 1.0
    resolution: Optional[List[int]] = None
    eps0: Optional[float] = None


class ReportEntry(BaseModel):
    name: str
    value: Optional[float] = None
    tolerance: Optional[float] = None
    passed: Optional[bool] = None


class ReportResponse(BaseModel):
    command: str
    passed: bool
    seed: int
    entries: List[ReportEntry]
    data: dict
    artifacts: dict = Field(default_factory=dict)


def _respond(report):
    entries = [
        ReportEntry(
            name=e.get("name", ""),
            value=e.get("value"),
            tolerance=e.get("tolerance"),
            passed=e.get("pass"),
        )
        for e in report.get("entries", [])
    ]
    artifacts = report.pop("artifacts", {})
    return ReportResponse(
        command=report.get("command", ""),
        passed=report.get("passed", False),
        seed=report.get("seed", 0),
        entries=entries,
        data=report,
        artifacts=artifacts,
    )


def _load(req: SceneRequest):
    try:
        scene, opts = load_scene(req.scene_text)
    except SceneError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    quad = dict(opts.get("quadrature", {}))
    if req.resolution is not None:
        quad["resolution"] = req.resolution
    if req.eps0 is not None:
        quad["eps0"] = req.eps0
    if req.seed is not None:
        scene.seed = req.seed
    return scene, quad


def create_app():
    app = FastAPI(
        title="folia",
        description="Godbillon-Vey type invariants and criticality diagnostics "
        "for framed distributions",
        version="0.1.0",
    )

    def guard(fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except SceneError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except FoliaError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/check", response_model=ReportResponse)
    def check(req: SceneRequest):
        scene, quad = _load(req)
        return _respond(guard(reports.report_check, scene, quad))

    @app.post("/eta", response_model=ReportResponse)
    def eta(req: SceneRequest):
        scene, _ = _load(req)
        return _respond(guard(reports.report_eta, scene))

    @app.post("/gv", response_model=ReportResponse)
    def gv(req: SceneRequest):
        scene, quad = _load(req)
        return _respond(guard(reports.report_gv, scene, quad))

    @app.post("/gvs", response_model=ReportResponse)
    def gvs(req: GvsRequest):
        scene, quad = _load(req)
        return _respond(guard(reports.report_gvs, scene, req.s, quad))

    @app.post("/vary", response_model=ReportResponse)
    def vary(req: VaryRequest):
        scene, quad = _load(req)
        return _respond(
            guard(reports.report_vary, scene, req.case, req.count, quad, req.fd_step)
        )

    @app.post("/critical", response_model=ReportResponse)
    def critical(req: CriticalRequest):
        scene, quad = _load(req)
        return _respond(guard(reports.report_critical, scene, req.lam, quad))

    @app.post("/metric-el", response_model=ReportResponse)
    def metric_el(req: SceneRequest):
        scene, quad = _load(req)
        return _respond(guard(reports.report_metric_el, scene, quad))

    @app.post("/index", response_model=ReportResponse)
    def index(req: IndexRequest):
        scene, quad = _load(req)
        return _respond(guard(reports.report_index, scene, req.pairs, quad))

    @app.post("/reeb/solve", response_model=ReportResponse)
    def reeb_solve(req: ReebSolveRequest):
        return _respond(guard(reports.report_reeb_solve, **req.model_dump()))

    @app.post("/reeb/family", response_model=ReportResponse)
    def reeb_family(req: ReebFamilyRequest):
        return _respond(
            guard(
                reports.report_reeb_family,
                A0=req.A0,
                A2=req.A2,
                A1_list=tuple(req.A1_list),
                rtol=req.rtol,
            )
        )

    @app.post("/bott", response_model=ReportResponse)
    def bott(req: BottRequest):
        lams = [complex(p[0], p[1] if len(p) > 1 else 0.0) for p in req.lams]
        return _respond(guard(reports.report_bott, lams))

    @app.post("/holo-check", response_model=ReportResponse)
    def holo_check(req: HoloCheckRequest):
        options = None
        if req.resolution is not None or req.eps0 is not None:
            options = {}
            if req.resolution is not None:
                options["resolution"] = req.resolution
            if req.eps0 is not None:
                options["eps0"] = req.eps0
        return _respond(guard(reports.report_holo_check, req.lam0, req.lam1, options))

    return app


app = create_app()
