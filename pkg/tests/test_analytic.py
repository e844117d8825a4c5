import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusionperc import analytic as an


def test_constants():
    assert an.UNBOOSTED_FUSION == 0.5
    assert an.BOOSTED_FUSION == 0.78125
    assert an.B103_THRESHOLD == 0.546694


@pytest.mark.parametrize("n,value", [(2, 1.0), (3, 0.5), (5, 0.25)])
def test_bethe(n, value):
    assert an.bethe_lower_bound(n) == value


@pytest.mark.parametrize("n,m,value", [(3, 2, 0.5), (3, 3, 0.25), (4, 4, 1 / 9)])
def test_multinode(n, m, value):
    assert an.multinode_lower_bound(n, m) == pytest.approx(value, abs=1e-15)


def test_bound_errors():
    with pytest.raises(an.AnalyticError):
        an.bethe_lower_bound(1)
    with pytest.raises(an.AnalyticError):
        an.multinode_lower_bound(3, 1)
    with pytest.raises(an.AnalyticError):
        an.periodic_tree_threshold(2, 3)
    with pytest.raises(an.AnalyticError):
        an.periodic_tree_threshold(3, 0)
    with pytest.raises(an.AnalyticError):
        an.inf_mod103b_threshold(0.01)


def test_inf_mod103b():
    lam = an.inf_mod103b_threshold(1e-4)
    assert abs(lam - 0.5898) <= 1e-4
    assert abs(lam + 2 * lam**3 - 1) <= 10 * 1e-4 * 7   # |f'| <= 7 on [0, 1]
    fine = an.inf_mod103b_threshold(1e-9)
    assert f"{fine:.6f}"[:7] == "0.58975"
    assert abs(fine - 0.589755) < 1e-6
    assert 0.5 < fine < 0.5898 + 1e-4
    # independent check against the real cubic root
    roots = np.roots([2, 0, 1, -1])
    real = roots[np.abs(roots.imag) < 1e-12].real
    assert abs(fine - real[0]) < 1e-9


def test_branching_two_class_agrees():
    lam = an.branching_threshold(an.inf_mod103b_spec(), 1e-9)
    assert abs(lam - an.inf_mod103b_threshold(1e-9)) < 1e-8


@pytest.mark.parametrize("n", range(3, 11))
def test_branching_bethe(n):
    assert abs(an.branching_threshold(an.bethe_spec(n), 1e-10) - 1 / (n - 1)) < 1e-9


@pytest.mark.parametrize("n,g", [(3, 1), (3, 2), (4, 3), (5, 3), (6, 1)])
def test_branching_periodic_tree(n, g):
    lam = an.branching_threshold(an.periodic_tree_spec(n, g), 1e-10)
    assert abs(lam - an.periodic_tree_threshold(n, g)) < 1e-8


def test_periodic_tree_values():
    assert an.periodic_tree_threshold(3, 2) == pytest.approx(2 ** (-2 / 3), abs=1e-12)
    assert abs(an.periodic_tree_threshold(3, 2) - 0.6300) < 1e-4
    for n in (3, 4, 7):
        assert abs(an.periodic_tree_threshold(n, 1000) - 1 / (n - 1)) < 1e-2
        for g in (1, 2, 5, 20):
            lam = an.periodic_tree_threshold(n, g)
            assert abs(lam * (n - 2) * (lam * (n - 1)) ** g - 1) < 1e-12


def test_periodic_tree_monotone():
    for n in range(3, 10):
        vals = [an.periodic_tree_threshold(n, g) for g in range(1, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    for g in range(1, 10):
        vals = [an.periodic_tree_threshold(n, g) for n in range(3, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_spectral_radius_cyclic():
    m = np.array([[0.0, 2.0], [0.5, 0.0]])   # period-2, radius 1
    assert abs(an.spectral_radius(m) - 1.0) < 1e-9
    assert an.spectral_radius(np.zeros((3, 3))) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8).flatmap(
    lambda k: st.lists(st.floats(0.0, 3.0), min_size=k * k, max_size=k * k)
    .map(lambda xs: np.array(xs).reshape(k, k))))
def test_spectral_radius_matches_eigvals(m):
    m = m + 0.01   # irreducible
    expected = max(abs(np.linalg.eigvals(m)))
    assert abs(an.spectral_radius(m) - expected) < 1e-7 * max(1.0, expected)


def test_branching_spec_validation():
    bad = an.BranchingSpec(lambda x: np.array([[x, -1.0], [0, x]]), ("a", "b"))
    with pytest.raises(an.AnalyticError):
        bad.at(0.5)
    wrong = an.BranchingSpec(lambda x: np.array([[x]]), ("a", "b"))
    with pytest.raises(an.AnalyticError):
        wrong.at(0.5)


# -- loss -------------------------------------------------------------------


def test_loss_model_fields():
    m = an.LossModel(0.9, 6)
    assert m.photon_transmissivity == pytest.approx(0.9**6)
    assert m.bond_factor == pytest.approx(0.9**12)
    for eta0, n in [(0.0, 3), (1.2, 3), (0.9, 1)]:
        with pytest.raises(an.AnalyticError):
            an.LossModel(eta0, n)


def test_loss_lambda_values():
    assert an.loss_lambda_lower_bound(an.LossModel(1.0, 3)) == 0.5
    v = an.loss_lambda_lower_bound(an.LossModel(0.9, 6))
    assert abs(v - 1 / (5 * 0.9**12)) < 1e-15
    assert abs(v - 0.7081) < 1e-4
    bad = an.loss_lambda_lower_bound(an.LossModel(0.5, 3))
    assert float(bad) == pytest.approx(32.0) and bad.impossible
    assert "impossible" in repr(bad)


@pytest.mark.parametrize("n", range(2, 51))
def test_lossless_reduces_to_bethe(n):
    assert an.loss_lambda_lower_bound(an.LossModel(1.0, n)) == pytest.approx(
        an.bethe_lower_bound(n), rel=1e-15)


def test_loss_eta_values():
    assert abs(an.loss_eta_lower_bound(6, 0.75) - 0.8957) <= 5e-5
    assert abs(an.loss_eta_lower_bound(5, 1.0) - 0.8706) < 1e-4
    assert an.loss_eta_lower_bound(2, 1.0) == 1.0
    assert an.loss_eta_lower_bound(2, 0.5).impossible
    with pytest.raises(an.AnalyticError):
        an.loss_eta_lower_bound(3, 0.0)


def test_loss_eta_shape():
    lams = np.linspace(0.51, 1.0, 25)
    for n in range(2, 51):
        vals = [an.loss_eta_lower_bound(n, lam) for lam in lams]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    for lam in np.linspace(0.51, 1.0, 25):
        vals = np.array([float(an.loss_eta_lower_bound(n, lam)) for n in range(2, 51)])
        i = int(np.argmin(vals))
        assert 0 < i < len(vals) - 1
        assert np.all(np.diff(vals[: i + 1]) < 0) and np.all(np.diff(vals[i:]) > 0)


def test_optimal_n():
    assert an.optimal_n(0.75, range(2, 21))[0] == 6
    assert abs(an.optimal_n(0.75)[1] - 0.8957) < 5e-5
    n, bound = an.optimal_n(1.0)
    assert n == 5 and abs(bound - 0.871) < 1e-3
    assert an.optimal_n(eta0=0.9)[0] == 6
    with pytest.raises(an.AnalyticError):
        an.optimal_n(eta0=0.5)            # every bound > 1
    with pytest.raises(an.AnalyticError):
        an.optimal_n(0.75, eta0=0.9)
    with pytest.raises(an.AnalyticError):
        an.optimal_n(0.75, [])


def test_loss_csv():
    text = an.eta_bound_csv(0.75, range(2, 21))
    rows = [ln.split(",") for ln in text.splitlines()[1:]]
    assert text.splitlines()[0] == "n,eta0c_lb"
    best = min(rows, key=lambda r: float(r[1]))
    assert best[0] == "6" and abs(float(best[1]) - 0.8957) < 5e-5
    assert an.lambda_bound_csv(0.9, [6]).splitlines() == ["n,lambda_lb", f"6,{1 / (5 * 0.9**12):.9g}"]
