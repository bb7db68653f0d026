"""HTTP facade over the library: every CLI verb maps to one endpoint.

The service holds no state; requests carry the full problem (pattern text,
space document, seeds) and responses carry everything a client needs to
reproduce the artifacts byte-for-byte.  Rows destined for CSV files travel
as pre-formatted strings so that local and remote clients write identical
files.
"""
from __future__ import annotations

import json
from typing import Optional, Union

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .densities import density
from .errors import MarkovLabError, ParseError
from .experiments import (ExperimentConfig, format_rows, jsonable,
                          list_experiments, run_experiment)
from .graphs import Bigraph, Graph, elimination_order, parse_graph
from .seqmeasure import k22_order_experiment, order_independence_report
from .spaces import FiniteMarkovSpace, space_from_json
from .spectral import convolution_report, spectrum

__all__ = ["create_app", "app"]

_MAX_SEED = 2**64 - 1


class DensityRequest(BaseModel):
    graph: str = Field(description="edge-list text, or bigraph JSON when bigraph=true")
    space: dict
    normalized: bool = False
    bigraph: bool = False


class DensityResponse(BaseModel):
    t: Union[float, str]
    width: int
    mode: str


class SpectrumRequest(BaseModel):
    space: dict


class SpectrumResponse(BaseModel):
    eigenvalues: list[float]
    residual: float


class ConvolutionRequest(BaseModel):
    k_max: int = Field(ge=0)
    powers: list[int] = Field(default=[2, 4, 8])


class ConvolutionResponse(BaseModel):
    header: list[str]
    rows: list[list[str]]
    checkpoints: list[int]
    partial_sums: dict[str, list[float]]
    strictly_increasing: dict[str, bool]
    plateau_free: dict[str, bool]


class SeqRequest(BaseModel):
    graph: str
    space: dict
    orders: int = Field(ge=0)
    seed: int = Field(ge=0, le=_MAX_SEED)


class SeqResponse(BaseModel):
    max_deviation: float
    orders_tested: int
    header: list[str]
    rows: list[list[str]]


class SphereK22Request(BaseModel):
    d: int = 3
    samples: int = Field(ge=1)
    seed: int = Field(ge=0, le=_MAX_SEED)


class SphereK22Response(BaseModel):
    header: list[str]
    rows: list[list[str]]
    mass_at_one: float
    ks_vs_uniform: float


class RunRequest(BaseModel):
    experiment: str
    params: dict = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0, le=_MAX_SEED)
    oracle: bool = False


class RunResponse(BaseModel):
    experiment: str
    seed: int
    params: dict
    header: list[str]
    rows: list[list[str]]
    assertions: list[dict]
    summary: dict
    all_passed: bool


def _parse_pattern(text: str, bigraph: bool) -> Union[Graph, Bigraph]:
    if bigraph:
        return Bigraph.from_json(text)
    return parse_graph(text)


def _parse_space(doc: dict) -> FiniteMarkovSpace:
    return space_from_json(json.dumps(doc))


def create_app() -> FastAPI:
    app = FastAPI(title="markovlab", version=__version__)

    @app.exception_handler(ParseError)
    async def _on_parse_error(request: Request, exc: ParseError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(MarkovLabError)
    async def _on_domain_error(request: Request, exc: MarkovLabError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/experiments")
    async def experiments() -> dict:
        return {"experiments": [
            {"name": info.name, "description": info.description,
             "defaults": jsonable(info.defaults)}
            for info in list_experiments()
        ]}

    @app.post("/experiments/run", response_model=RunResponse)
    def experiments_run(req: RunRequest) -> RunResponse:
        cfg = ExperimentConfig(experiment=req.experiment, params=req.params,
                               seed=req.seed, use_oracle=req.oracle)
        result = run_experiment(cfg)
        return RunResponse(
            experiment=result.experiment, seed=result.seed,
            params=jsonable(result.params),
            header=list(result.header), rows=format_rows(result.rows),
            assertions=[a.to_json() for a in result.assertions],
            summary=jsonable(result.summary), all_passed=result.all_passed)

    @app.post("/density", response_model=DensityResponse)
    def density_endpoint(req: DensityRequest) -> DensityResponse:
        pattern = _parse_pattern(req.graph, req.bigraph)
        s = _parse_space(req.space)
        graph = pattern.to_graph() if isinstance(pattern, Bigraph) else pattern
        _, width = elimination_order(graph)
        value = density(pattern, s, normalized=req.normalized)
        t = str(value) if s.is_rational else float(value)
        return DensityResponse(t=t, width=width, mode=s.mode)

    @app.post("/spectrum", response_model=SpectrumResponse)
    def spectrum_endpoint(req: SpectrumRequest) -> SpectrumResponse:
        spec = spectrum(_parse_space(req.space))
        return SpectrumResponse(eigenvalues=[float(v) for v in spec.values],
                                residual=float(spec.residual))

    @app.post("/convolution", response_model=ConvolutionResponse)
    def convolution_endpoint(req: ConvolutionRequest) -> ConvolutionResponse:
        report = convolution_report(req.k_max, powers=tuple(req.powers))
        rows = format_rows(
            [(r.k, r.lam, r.lower_bound, r.ratio) for r in report.rows])
        return ConvolutionResponse(
            header=["k", "lambda", "lower_bound", "ratio"], rows=rows,
            checkpoints=list(report.checkpoints),
            partial_sums={str(p): [float(v) for v in sums]
                          for p, sums in report.partial_sums.items()},
            strictly_increasing={str(p): bool(v) for p, v in
                                 report.strictly_increasing.items()},
            plateau_free={str(p): bool(v) for p, v in
                          report.plateau_free.items()})

    @app.post("/seq", response_model=SeqResponse)
    def seq_endpoint(req: SeqRequest) -> SeqResponse:
        g = parse_graph(req.graph)
        s = _parse_space(req.space)
        report = order_independence_report(g, s, req.orders, req.seed)
        rows = format_rows(
            [(i, " ".join(str(v) for v in order), dev)
             for i, (order, dev) in enumerate(zip(report.orders,
                                                  report.deviations))])
        return SeqResponse(max_deviation=report.max_deviation,
                           orders_tested=report.orders_tested,
                           header=["order_index", "order", "deviation"],
                           rows=rows)

    @app.post("/sphere-k22", response_model=SphereK22Response)
    def sphere_k22_endpoint(req: SphereK22Request) -> SphereK22Response:
        report = k22_order_experiment(req.d, req.samples, req.seed)
        rows = []
        for label, samples in (("A", report.samples_a), ("B", report.samples_b)):
            rows.extend((label, i, float(x)) for i, x in enumerate(samples))
        return SphereK22Response(
            header=["order", "sample_index", "inner_product"],
            rows=format_rows(rows),
            mass_at_one=float(report.mass_at_one),
            ks_vs_uniform=float(report.ks_vs_uniform))

    return app


app = create_app()
