import logging
from typing import Any, Awaitable, Callable, Literal, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response
from pydantic import ValidationError

from backend.app.core.config import get_settings
from backend.app.core.errors import LabError
from backend.app.core.log import configure_logging
from backend.app.lab.extended import to_float
from backend.app.lab.fenchel import (
    bernoulli_rate,
    corrected_rate,
    exposed_point_test,
    gamma_exposed_point_test,
)
from backend.app.lab.grids import make_grid, parse_grid_spec
from backend.app.lab.ldp_lab import counterexample_report, figure1_data
from backend.app.models.dto import CounterexampleRequest, rows_to_jsonable, to_jsonable

SETTINGS = get_settings()
logger = configure_logging()

app = FastAPI(title=SETTINGS.app_name)
app.state.settings = SETTINGS


@app.middleware("http")
async def log_requests(
    request: Request, call_next: Callable[[Request], Awaitable[Response]]
) -> Response:
    """Log request method/path pairs alongside the response status."""
    response = await call_next(request)
    logger.info("%s %s -> %s", request.method, request.url.path, response.status_code)
    return response


def _guarded(operation: Callable[[], Any]) -> Any:
    """Run a lab operation, mapping lab and validation errors to HTTP 400."""
    try:
        return operation()
    except (LabError, ValidationError) as exc:
        logger.warning("rejected request: %s", exc)
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict[str, object]:
    """Return service status and the canonical defaults."""
    settings = getattr(app.state, "settings", SETTINGS)
    return {
        "status": "ok",
        "app_name": settings.app_name,
        "default_p": settings.default_p,
        "default_grid": settings.default_grid,
        "default_n_list": settings.default_n_list,
    }


@app.get("/figure1")
def figure1(p: Optional[float] = None, grid: Optional[str] = None) -> JSONResponse:
    """Both rate functions on a grid inside [0, 1]."""
    settings = getattr(app.state, "settings", SETTINGS)

    def build():
        xs = make_grid(*parse_grid_spec(grid or settings.default_grid))
        return figure1_data(settings.default_p if p is None else p, xs)

    return JSONResponse(to_jsonable(_guarded(build)))


@app.get("/rate")
def rate(
    p: Optional[float] = None,
    kind: Literal["bernoulli", "corrected"] = "corrected",
    t: Optional[float] = None,
    grid: Optional[str] = None,
) -> JSONResponse:
    """A single rate function on a grid; +inf is reported as "inf"."""
    settings = getattr(app.state, "settings", SETTINGS)
    p = settings.default_p if p is None else p

    def build():
        xs = make_grid(*parse_grid_spec(grid or settings.default_grid))
        if kind == "bernoulli":
            values = [to_float(bernoulli_rate(p if t is None else t, float(x))) for x in xs]
        else:
            values = [to_float(corrected_rate(p, float(x))) for x in xs]
        return [[float(x), value] for x, value in zip(xs, values)]

    return JSONResponse(rows_to_jsonable(["x", "rate"], _guarded(build)))


@app.get("/exposed")
def exposed(
    y: float,
    p: Optional[float] = None,
    variant: Literal["corrected", "gamma"] = "corrected",
) -> JSONResponse:
    """Exposed-point verdict for y."""
    settings = getattr(app.state, "settings", SETTINGS)
    test = gamma_exposed_point_test if variant == "gamma" else exposed_point_test
    verdict = _guarded(lambda: test(settings.default_p if p is None else p, y))
    return JSONResponse(to_jsonable(verdict))


@app.post("/counterexample")
def counterexample(payload: CounterexampleRequest) -> JSONResponse:
    """Finite-n counterexample report for the open event (a, b)."""
    report = _guarded(
        lambda: counterexample_report(
            payload.p,
            payload.a,
            payload.b,
            payload.n_list,
            tol_true=payload.tol_true,
            sep_min=payload.sep_min,
            n_min=payload.n_min,
        )
    )
    return JSONResponse(to_jsonable(report))
