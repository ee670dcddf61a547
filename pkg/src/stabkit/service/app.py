"""HTTP service exposing the samplers, statistics, operators,
diagnostics, and the Monte Carlo harness.

Every handler is a thin translation layer: validate the request model,
call the library, wrap the result with a run manifest. Responses are
deterministic functions of the request, so clients may archive the raw
bytes as reproducible artifacts.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse

from .. import __version__
from ..bounds import WindowRule, theorem31_bound, theta_bound
from ..costs import (
    Window,
    add_one_cost,
    add_one_cost_marked,
    flexible_cost,
    second_order_cost,
)
from ..density import DensitySpec
from ..diagnostics import estimate_kexp, estimate_moment_sup, estimate_radius_tail
from ..entropy import WeightVector, kl_entropy, solve_weights, weighted_entropy
from ..geometry import Box, PointCloud, StabkitError
from ..harness import MonteCarloReport, run_experiment
from ..knn import build_knn_graph, total_edge_length
from ..manifest import RunManifest, canonical_json
from ..mst import euclidean_mst, mst_restricted, mst_window_cost
from ..process import ProcessConfig, sample
from ..regions import Region
from ..statistics import make_statistic
from . import models as m

app = FastAPI(title="stabkit", version=__version__)


@app.exception_handler(StabkitError)
async def _domain_error(_request: Request, exc: StabkitError):
    raise HTTPException(status_code=400, detail=str(exc))


def _manifest(command: str, payload, seed: int = 0) -> m.Manifest:
    run = RunManifest.for_request(command, payload, seed)
    return m.Manifest(**run.to_dict())


def _cloud_from(req: m.CloudInput) -> PointCloud:
    if req.cloud_csv is not None:
        return PointCloud.from_csv(req.cloud_csv, dim=req.dim)
    return PointCloud(np.asarray(req.points, dtype=float))


def _statistic_from(doc: m.StatisticDoc, n_for_scale=None):
    scale = n_for_scale if doc.scaling == "thermodynamic" else None
    return make_statistic(doc.name, doc.params, n_for_scale=scale)


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/sample", response_model=m.SampleResponse)
def sample_endpoint(req: m.SampleRequest) -> m.SampleResponse:
    config = ProcessConfig.from_dict(req.process.as_config_dict())
    cloud = sample(config, req.seed_offset)
    manifest = _manifest("sample", req.model_dump(), config.seed)
    csv = f"# manifest: {canonical_json(manifest.model_dump())}\n" + cloud.to_csv()
    return m.SampleResponse(manifest=manifest, dim=cloud.dim, n=cloud.n, csv=csv)


@app.post("/stat/knn", response_model=m.KnnStatResponse)
def stat_knn(req: m.KnnStatRequest) -> m.KnnStatResponse:
    cloud = _cloud_from(req)
    value = total_edge_length(cloud, req.k, req.theta)
    graph_csv = None
    if req.include_graph and cloud.n:
        graph_csv = build_knn_graph(cloud, req.k).to_csv()
    return m.KnnStatResponse(
        manifest=_manifest("stat/knn", req.model_dump()),
        value=value, k=req.k, theta=req.theta, n=cloud.n, graph_csv=graph_csv,
    )


@app.post("/stat/entropy", response_model=m.EntropyStatResponse)
def stat_entropy(req: m.EntropyStatRequest) -> m.EntropyStatResponse:
    cloud = _cloud_from(req)
    if req.weights == "kl":
        est = kl_entropy(cloud, req.k)
        wv = WeightVector.from_weights(np.asarray(est.weights), req.k, cloud.dim)
    else:
        if req.weights == "auto":
            wv = solve_weights(req.k, cloud.dim)
        else:
            wv = WeightVector.from_weights(
                np.asarray(req.weights, dtype=float), req.k, cloud.dim
            )
        est = weighted_entropy(cloud, req.k, wv)
    return m.EntropyStatResponse(
        manifest=_manifest("stat/entropy", req.model_dump()),
        value=est.value, k=req.k, n=cloud.n,
        weights=[float(v) for v in wv.weights],
        residual_sum=wv.residual_sum,
        residual_moments=list(wv.residual_moments),
    )


@app.post("/stat/euler", response_model=m.EulerStatResponse)
def stat_euler(req: m.EulerStatRequest) -> m.EulerStatResponse:
    from ..complexes import cech_counts, euler_characteristic, vr_counts

    cloud = _cloud_from(req)
    scale = 1.0 if req.scale_n is None else float(req.scale_n) ** (1.0 / cloud.dim)
    if cloud.n == 0:
        counts, chi = [], 0
    else:
        builder = vr_counts if req.kind == "vr" else cech_counts
        sc = builder(cloud, req.r, scale, req.budget)
        counts, chi = list(sc.counts), euler_characteristic(sc)
    return m.EulerStatResponse(
        manifest=_manifest("stat/euler", req.model_dump()),
        chi=float(chi), counts=counts, kind=req.kind, r=req.r, scale=scale, n=cloud.n,
    )


@app.post("/stat/mst", response_model=m.MstStatResponse)
def stat_mst(req: m.MstStatRequest) -> m.MstStatResponse:
    cloud = _cloud_from(req)
    if req.box is not None:
        arr = np.asarray(req.box, dtype=float)
        result = mst_restricted(cloud, Box(arr[:, 0], arr[:, 1]))
    else:
        result = euclidean_mst(cloud)
    window = None
    if req.window_alpha is not None:
        if req.window_x is None:
            raise HTTPException(status_code=422, detail="window_x required with window_alpha")
        if req.box is not None:
            arr = np.asarray(req.box, dtype=float)
            outer = Box(arr[:, 0], arr[:, 1])
        else:
            outer = Box(cloud.points.min(axis=0), cloud.points.max(axis=0))
        flex, full, gap = mst_window_cost(cloud, req.window_x, outer, req.window_alpha)
        window = m.MstWindowGap(flexible_cost=flex, full_cost=full, gap=gap)
    edges = [[float(i), float(j), l] for i, j, l in result.edges] if req.include_edges else None
    return m.MstStatResponse(
        manifest=_manifest("stat/mst", req.model_dump()),
        total_length=result.total_length, n=cloud.n, n_edges=len(result.edges),
        edges=edges, window=window,
    )


@app.post("/costs", response_model=m.CostResponse)
def costs(req: m.CostRequest) -> m.CostResponse:
    config = ProcessConfig.from_dict(req.process.as_config_dict())
    cloud = sample(config, req.seed_offset)
    stat = _statistic_from(req.stat)
    if req.op == "add":
        value = add_one_cost(stat, cloud, req.x)
    elif req.op == "marked":
        value = add_one_cost_marked(stat, cloud, req.x, req.y)
    elif req.op == "second":
        if req.x2 is None:
            raise HTTPException(status_code=422, detail="x2 required for the second-order cost")
        value = second_order_cost(stat, cloud, req.x, req.x2)
    else:
        wdoc = req.window or m.WindowDoc()
        value = flexible_cost(stat, cloud, req.x, Window.from_dict(
            {k: v for k, v in wdoc.model_dump().items() if v is not None}
        ))
    return m.CostResponse(
        manifest=_manifest("costs", req.model_dump(), config.seed),
        op=req.op, value=value, statistic=stat.name, cloud_size=cloud.n,
    )


@app.post("/radius", response_model=m.AssumptionReportDoc)
def radius(req: m.RadiusRequest) -> m.AssumptionReportDoc:
    config = ProcessConfig.from_dict(req.process.as_config_dict())
    stat = _statistic_from(req.stat)
    if req.assumption == "tail":
        if req.x is None or req.radii is None:
            raise HTTPException(status_code=422, detail="tail needs x and radii")
        report = estimate_radius_tail(stat, config, req.x, req.radii,
                                      req.replications, req.probes)
    elif req.assumption == "kexp":
        if req.distances is None:
            raise HTTPException(status_code=422, detail="kexp needs distances")
        region = Region.from_dict((req.region or m.RegionDoc()).model_dump())
        report = estimate_kexp(stat, config, region, req.distances, req.replications)
    else:
        if req.p is None or req.x_grid is None:
            raise HTTPException(status_code=422, detail="moment needs p and x_grid")
        report = estimate_moment_sup(stat, config, req.p, req.x_grid, req.replications)
    doc = report.to_dict()
    return m.AssumptionReportDoc(
        manifest=_manifest("radius", req.model_dump(), config.seed), **doc
    )


@app.post("/weights", response_model=m.WeightsResponse)
def weights(req: m.WeightsRequest) -> m.WeightsResponse:
    wv = solve_weights(req.k, req.d)
    return m.WeightsResponse(
        manifest=_manifest("weights", req.model_dump()),
        k=wv.k, dim=wv.dim, weights=[float(v) for v in wv.weights],
        support_set=list(wv.support_set), residual_sum=wv.residual_sum,
        residual_moments=list(wv.residual_moments),
    )


@app.post("/clt", response_model=m.CltResponse)
def clt(req: m.CltRequest) -> m.CltResponse:
    report = run_experiment(
        req.stat.model_dump(), dict(req.process_template), req.grid,
        req.replications, seed=req.seed, workers=req.workers,
    )
    doc = report.to_dict()
    # the worker count is a scheduling knob, not configuration: reports
    # must be byte-identical across worker counts
    digest_payload = {k: v for k, v in req.model_dump().items() if k != "workers"}
    return m.CltResponse(manifest=_manifest("clt", digest_payload, req.seed), **doc)


@app.post("/bound/theta", response_model=m.ThetaBoundResponse)
def bound_theta(req: m.ThetaBoundRequest) -> m.ThetaBoundResponse:
    density = DensitySpec.from_dict(req.density.model_dump())
    region = Region.from_dict(req.region.model_dump())
    tb = theta_bound(density, region, req.c2, req.c3, req.p, req.s,
                     draws=req.draws, seed=req.seed)
    return m.ThetaBoundResponse(
        manifest=_manifest("bound/theta", req.model_dump(), req.seed), **tb.to_dict()
    )


@app.post("/bound/gamma", response_model=m.GammaBoundResponse)
def bound_gamma(req: m.GammaBoundRequest) -> m.GammaBoundResponse:
    config = ProcessConfig.from_dict(req.process.as_config_dict())
    stat = _statistic_from(req.stat)
    outer = config.density.support
    rule = WindowRule(req.window, radius=req.window_radius, side=req.window_side,
                      outer=outer)
    report = theorem31_bound(stat, config, rule, triples=req.triples, inner=req.inner,
                             var_reps=req.var_reps, batches=req.batches, seed=req.seed)
    doc = report.to_dict()
    doc.pop("theta", None)
    return m.GammaBoundResponse(
        manifest=_manifest("bound/gamma", req.model_dump(), req.seed),
        total=report.total(), **doc,
    )


@app.post("/report/csv", response_class=PlainTextResponse)
def report_csv(req: m.ReportCsvRequest) -> str:
    doc = req.report
    try:
        lines = ["n,mean,var,d_k,dkw_radius"]
        for r in doc["records"]:
            lines.append(
                f"{r['n']},{repr(float(r['mean']))},{repr(float(r['variance']))},"
                f"{repr(float(r['d_k']))},{repr(float(r['dkw_radius']))}"
            )
        return "\n".join(lines) + "\n"
    except (KeyError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=f"not a harness report: {exc}")
