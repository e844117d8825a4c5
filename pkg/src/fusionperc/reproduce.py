"""Regression table of reference threshold and bound values."""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from . import analytic
from .lattice import build_named
from .percolate import DEFAULT_SEED
from .threshold import estimate_threshold, intersect, trace_boundary


@dataclass(frozen=True)
class Row:
    key: str
    target: float
    tol: float
    compute: Callable[[int, int], float]
    slow: bool = False


@dataclass
class Result:
    row: Row
    value: float
    seconds: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and abs(self.value - self.row.target) <= self.row.tol

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        shown = "nan" if self.error else f"{self.value:.5f}"
        tail = f"  ({self.error})" if self.error else ""
        return (f"{status} {self.row.key:<28} {shown:>9}  target {self.row.target:g} "
                f"+/- {self.row.tol:g}  [{self.seconds:.1f}s]{tail}")


def _threshold(name: str, extents, trials: int):
    def run(seed: int, workers: int) -> float:
        lat = build_named(name, extents)
        return estimate_threshold(lat, trials, seed, workers=workers).p_c
    return run


def _square_site_bond(seed: int, workers: int) -> float:
    lat = build_named("square-2d", (256, 256))
    b = trace_boundary(lat, np.linspace(0.6, 1.0, 15), 100, seed, workers=workers)
    return intersect(b, 2).p


def _optimal_n_lambda_one(seed: int, workers: int) -> float:
    return float(analytic.optimal_n(1.0)[1])


def _optimal_n_eta(seed: int, workers: int) -> float:
    return float(analytic.optimal_n(eta0=0.9)[0])


ROWS = (
    Row("square-2d", 0.5, 0.005, _threshold("square-2d", (512, 512), 200)),
    Row("two-layer-logical-square", 0.672, 0.010,
        _threshold("two-layer-logical-square", (576, 576), 200)),
    Row("b103-mod-3d", 0.627, 0.010, _threshold("b103-mod-3d", (50, 50, 25), 100)),
    Row("b103-standard-3d", 0.5467, 0.005, _threshold("b103-standard-3d", (56, 56, 28), 100)),
    Row("brickwork-mod-2d", 0.746, 0.010, _threshold("brickwork-mod-2d", (236, 236), 200)),
    Row("b103-mod-4d", 0.611, 0.012, _threshold("b103-mod-4d", (14, 14, 14, 14), 100),
        slow=True),
    Row("square-2d site-bond k=2", 0.825, 0.010, _square_site_bond, slow=True),
    Row("inf-103b", 0.5898, 1e-4, lambda s, w: analytic.inf_mod103b_threshold(1e-4)),
    Row("bethe n=3", 0.5, 1e-12, lambda s, w: analytic.bethe_lower_bound(3)),
    Row("loss-eta n=6 lambda=0.75", 0.8957, 5e-5,
        lambda s, w: float(analytic.loss_eta_lower_bound(6, 0.75))),
    Row("optimal-n lambda=1 bound", 0.871, 1e-3, _optimal_n_lambda_one),
    Row("optimal-n eta0=0.9", 6, 0, _optimal_n_eta),
)


def run(seed: int = DEFAULT_SEED, workers: int = 1, skip_slow: bool = False,
        only: list[str] | None = None, echo: Callable[[str], None] | None = None) -> list[Result]:
    results = []
    for row in ROWS:
        if skip_slow and row.slow:
            continue
        if only and not any(k in row.key for k in only):
            continue
        t0 = time.perf_counter()
        try:
            value, err = float(row.compute(seed, workers)), None
        except Exception as exc:  # reported as a failed row
            value, err = float("nan"), f"{type(exc).__name__}: {exc}"
        res = Result(row, value, time.perf_counter() - t0, err)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
