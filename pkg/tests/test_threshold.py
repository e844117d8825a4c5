import json

import numpy as np
import pytest

from fusionperc.lattice import bethe_tree, build_named
from fusionperc.lattice.unitcell import EDGE_KINDS
from fusionperc.threshold import (
    Boundary,
    ThresholdError,
    _crossing,
    estimate_threshold,
    intersect,
    trace_boundary,
)


@pytest.fixture(scope="module")
def square64():
    return build_named("square-2d", (64, 64))


def test_square_estimate(square64):
    est = estimate_threshold(square64, 60, seed=3)
    assert abs(est.p_c - 0.5) < 0.015
    assert est.ci_low <= est.p_c <= est.ci_high
    assert est.method == "wrap_crossing" and not est.low_confidence
    doc = json.loads(est.to_json())
    for key in ("lattice", "extents", "method", "p_c", "ci_low", "ci_high", "trials", "seed"):
        assert key in doc
    assert doc["extents"] == "64x64"
    assert abs(doc["diagnostics"]["largest_fraction_inflection"] - 0.5) < 0.05


def test_estimate_is_deterministic(square64):
    a = estimate_threshold(square64, 10, seed=5).to_json()
    b = estimate_threshold(square64, 10, seed=5, workers=2).to_json()
    assert a == b


def test_two_size_crossing(square64):
    est = estimate_threshold(square64, 60, seed=3, method="two_size_crossing")
    assert abs(est.p_c - 0.5) < 0.02
    assert est.extents == "64x64,32x32"
    assert est.ci_low <= est.p_c <= est.ci_high


def test_no_crossing_below_site_threshold(square64):
    with pytest.raises(ThresholdError):
        estimate_threshold(square64, 5, q=0.3)


def test_rejects_non_periodic_and_bad_method(square64):
    with pytest.raises(ThresholdError):
        estimate_threshold(bethe_tree(3, 1, 4), 5)
    with pytest.raises(ThresholdError):
        estimate_threshold(square64, 5, method="eyeball")


def test_flat_region_midpoint():
    p = np.linspace(0, 1, 11)
    y = np.array([0, 0.1, 0.2, 0.5, 0.5, 0.5, 0.5, 0.8, 0.9, 1, 1])
    pc, flat = _crossing(p, y)
    assert flat and abs(pc - 0.45) < 1e-12
    pc, flat = _crossing(p, np.clip(p, 0, 1))
    assert not flat and abs(pc - 0.5) < 1e-12


def test_diamond_pure_bond():
    lat = build_named("diamond-3d", (24, 24, 24))
    est = estimate_threshold(lat, 40, seed=2)
    assert abs(est.p_c - 0.389) < 0.01


def test_trace_boundary_square():
    lat = build_named("square-2d", (48, 48))
    b = trace_boundary(lat, [0.4, 0.75, 0.85, 1.0], 30, seed=1, grid=0.002)
    assert b.skipped == [0.4]
    assert list(b.q) == [0.75, 0.85, 1.0]
    # p_c(q) nonincreasing within the joint bands
    assert np.all(np.diff(b.p_c) <= (b.ci_high - b.ci_low)[1:] + (b.ci_high - b.ci_low)[:-1])
    assert abs(intersect(b, 0).p - b.p_c[-1]) < 1e-15
    with pytest.raises(ThresholdError):
        trace_boundary(lat, [0.2, 0.3], 5)
    with pytest.raises(ThresholdError):
        trace_boundary(lat, [0.0, 0.5], 5)


def _synthetic(q):
    q = np.asarray(q, dtype=float)
    pc = 0.5 / q
    return Boundary(q, pc, pc - 0.01, pc + 0.01, "synthetic", "-", 0, 0)


def test_intersect_synthetic():
    b = _synthetic(np.linspace(0.55, 1.0, 10))
    res = intersect(b, 2)
    # p^2 * p = 0.5 on the exact curve; linear interpolation is close
    assert abs(res.p - 0.5 ** (1 / 3)) < 2e-3
    assert abs(res.q - res.p**2) < 1e-12
    assert res.p_low <= res.p <= res.p_high
    p, q = res
    assert (p, q) == (res.p, res.q)


def test_intersect_errors():
    b = _synthetic([0.9, 1.0])
    with pytest.raises(ThresholdError):
        intersect(b, 2)
    with pytest.raises(ThresholdError):
        intersect(_synthetic([0.6, 0.8]), 0)
    with pytest.raises(ThresholdError):
        intersect(b, -1)


def test_boundary_serialisation():
    b = _synthetic([0.6, 0.8, 1.0])
    text = b.to_csv()
    assert text.splitlines()[0] == "q,p_c,ci_low,ci_high"
    back = Boundary.from_csv(text)
    assert np.allclose(back.p_c, b.p_c)
    doc = json.loads(b.to_json())
    assert doc["lattice"] == "synthetic" and len(doc["points"]) == 3


def test_two_layer_modified_site_bond_intersection():
    # middle nodes occupied with q, stuck-open layer bonds, fused layer bonds at p
    lat = build_named("two-layer-logical-square", (96, 96))
    site_mask = np.asarray(lat.colors) > 0
    fixed = np.asarray(lat.edge_kind) == EDGE_KINDS.index("blue")
    b = trace_boundary(lat, np.linspace(0.35, 0.6, 6), 60, 7, grid=0.002,
                       site_mask=site_mask, fixed_bonds=fixed)
    assert abs(intersect(b, 2).p - 0.672) < 0.01
