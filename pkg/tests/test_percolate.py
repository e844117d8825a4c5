import itertools

import networkx as nx
import numpy as np
import pytest
from scipy.stats import binom

from conftest import small_graph
from fusionperc import _nz
from fusionperc.lattice import build_named
from fusionperc.percolate import (
    SweepCurve,
    SweepError,
    _problem_from,
    component_stats,
    micro_trial,
    nz_bond_sweep,
    nz_site_bond_sweep,
    p_grid,
    sample_instance,
)


def exact_largest(n_nodes, edges, p):
    """Canonical mean largest-cluster fraction by enumerating bond subsets."""
    m = len(edges)
    out = np.zeros_like(p)
    for mask in range(1 << m):
        g = nx.Graph()
        g.add_nodes_from(range(n_nodes))
        g.add_edges_from(e for i, e in enumerate(edges) if mask >> i & 1)
        big = max(len(c) for c in nx.connected_components(g)) / n_nodes
        k = bin(mask).count("1")
        out += big * p**k * (1 - p) ** (m - k)
    return out


def exact_micro(n_nodes, edges):
    """Mean largest fraction over all subsets of each size k."""
    m = len(edges)
    acc = np.zeros(m + 1)
    cnt = np.zeros(m + 1)
    for mask in range(1 << m):
        g = nx.Graph()
        g.add_nodes_from(range(n_nodes))
        g.add_edges_from(e for i, e in enumerate(edges) if mask >> i & 1)
        k = bin(mask).count("1")
        acc[k] += max(len(c) for c in nx.connected_components(g)) / n_nodes
        cnt[k] += 1
    return acc / cnt


def random_graphs(count, seed=3):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, 8))
        pairs = list(itertools.combinations(range(n), 2))
        m = int(rng.integers(1, min(12, len(pairs)) + 1))
        idx = rng.choice(len(pairs), size=m, replace=False)
        out.append((n, [pairs[i] for i in sorted(idx)]))
    return out


# -- convolution ------------------------------------------------------------


@pytest.mark.parametrize("m", [1, 7, 100, 5000])
def test_binomial_weights_normalised(m):
    w = np.empty(m + 1)
    for p in p_grid(1e-3):
        lo, hi, total = _nz.binomial_window(m, p, w, 1e-18)
        assert abs(w[lo:hi + 1].sum() / total - 1.0) < 1e-12


def test_binomial_weights_match_pmf():
    m = 1000
    w = np.empty(m + 1)
    for p in (0.01, 0.3, 0.5, 0.77, 0.999):
        lo, hi, total = _nz.binomial_window(m, p, w, 1e-18)
        ours = np.zeros(m + 1)
        ours[lo:hi + 1] = w[lo:hi + 1] / total
        assert np.allclose(ours, binom.pmf(np.arange(m + 1), m, p), atol=1e-12)


def test_convolution_of_exact_micro_is_exact():
    n, edges = 5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (1, 3)]
    micro = exact_micro(n, edges)[None, :]
    grid = p_grid(0.01)
    out_c = np.empty((1, grid.size))
    out_s = np.empty((0, grid.size))
    _nz.convolve_trial(grid, micro, np.zeros(0, dtype=np.int64), out_c, out_s, 1e-18)
    assert np.allclose(out_c[0], exact_largest(n, edges, grid), atol=1e-12)


def test_two_node_closed_form():
    g = small_graph(2, [(0, 1)])
    c = nz_bond_sweep(g, ("largest_fraction",), trials=3)
    assert np.allclose(c.mean["largest_fraction"], 0.5 + 0.5 * c.p, atol=1e-12)


def test_triangle_matches_enumeration():
    edges = [(0, 1), (1, 2), (0, 2)]
    c = nz_bond_sweep(small_graph(3, edges), ("largest_fraction",), trials=5, grid=0.01)
    assert np.allclose(c.mean["largest_fraction"], exact_largest(3, edges, c.p), atol=1e-12)


@pytest.mark.parametrize("n,edges", random_graphs(25))
def test_small_graphs_match_enumeration(n, edges):
    c = nz_bond_sweep(small_graph(n, edges), ("largest_fraction",), trials=400, grid=0.02,
                      seed=5)
    exact = exact_largest(n, edges, c.p)
    err = np.abs(c.mean["largest_fraction"] - exact)
    assert np.all(err <= 3 * c.stderr["largest_fraction"] + 1e-12)


# -- sweeps -------------------------------------------------------------------


@pytest.fixture(scope="module")
def square16():
    return build_named("square-2d", (16, 16))


def test_curves_bounded_and_monotone(square16):
    c = nz_bond_sweep(square16, trials=50, grid=0.01)
    for name in c.params:
        m, s = c.mean[name], c.stderr[name]
        assert (m >= 0).all() and (m <= 1).all() and (s >= 0).all()
        assert np.all(np.diff(m) >= -3 * (s[1:] + s[:-1]) - 1e-12)
    assert np.all(c.mean["colored_largest_fraction"] <= c.mean["largest_fraction"] + 1e-12)


def test_microcanonical_record_monotone(square16):
    prob = _problem_from(square16, 1.0, p_grid(0.01))
    largest, colored, wrap_first, merges, _ = micro_trial(prob, 1, 0)
    assert np.all(np.diff(largest) >= 0)
    assert np.all(colored <= largest)
    # wrapping in every axis implies in any axis first
    assert wrap_first[2] <= min(wrap_first[0], wrap_first[1]) <= wrap_first[3]
    assert wrap_first[3] == max(wrap_first[0], wrap_first[1])


def test_merge_count(square16):
    prob = _problem_from(square16, 1.0, p_grid(0.01))
    for i in range(5):
        *_, merges, _ = micro_trial(prob, 9, i)
        assert merges == square16.n_nodes - 1
    inst = sample_instance(square16, 0.45, seed=2)
    stats = component_stats(inst)
    assert stats.merges == square16.n_nodes - stats.n_components


def test_site_bond_q1_equals_bond(square16):
    a = nz_bond_sweep(square16, trials=10, seed=4)
    b = nz_site_bond_sweep(square16, 1.0, trials=10, seed=4)
    assert a.to_csv().replace("q=1.0", "") == b.to_csv().replace("q=1.0", "")
    for name in a.params:
        assert np.array_equal(a.mean[name], b.mean[name])


def test_site_bond_q0_is_empty(square16):
    c = nz_site_bond_sweep(square16, 0.0, trials=5)
    assert np.all(c.mean["largest_fraction"] == 0)
    assert np.all(c.mean["wrap_probability"] == 0)


def test_determinism_and_worker_count(square16):
    a = nz_bond_sweep(square16, trials=12, seed=77, workers=1).to_csv()
    b = nz_bond_sweep(square16, trials=12, seed=77, workers=1).to_csv()
    c = nz_bond_sweep(square16, trials=12, seed=77, workers=3).to_csv()
    assert a == b == c
    assert a != nz_bond_sweep(square16, trials=12, seed=78).to_csv()


def test_csv_format(square16):
    c = nz_site_bond_sweep(square16, 0.9, trials=3, seed=1, grid=0.1)
    text = c.to_csv()
    lines = text.splitlines()
    assert lines[0] == "# lattice=square-2d extents=16x16 trials=3 seed=1 q=0.9"
    assert lines[1] == ("p,largest_fraction_mean,largest_fraction_stderr,"
                        "colored_largest_fraction_mean,colored_largest_fraction_stderr,"
                        "wrap_probability_mean,wrap_probability_stderr")
    back = SweepCurve.from_csv(text)
    assert back.meta["q"] == 0.9 and back.meta["trials"] == 3
    assert np.allclose(back.mean["largest_fraction"], c.mean["largest_fraction"], rtol=1e-8)


def test_sweep_errors(square16):
    with pytest.raises(SweepError):
        nz_bond_sweep(square16, trials=0)
    with pytest.raises(SweepError):
        nz_site_bond_sweep(square16, 1.5)
    with pytest.raises(SweepError):
        nz_bond_sweep(square16, ("bogus",))
    with pytest.raises(SweepError):
        nz_bond_sweep(square16, wrap_rule="axis7")


def test_wrap_rules_ordered(square16):
    curves = {r: nz_bond_sweep(square16, ("wrap_probability",), 20, 3, wrap_rule=r,
                               grid=0.01).mean["wrap_probability"]
              for r in ("any", "all", "mean", "axis0")}
    assert np.all(curves["all"] <= curves["mean"] + 1e-12)
    assert np.all(curves["mean"] <= curves["any"] + 1e-12)


# -- instances ---------------------------------------------------------------


def test_sample_instance_extremes(square16):
    assert sample_instance(square16, 1.0, 1.0, 3).bonds.all()
    assert not sample_instance(square16, 0.0, 1.0, 3).bonds.any()


def test_sample_instance_rate():
    lat = build_named("square-2d", (224, 224))   # 100352 bonds
    inst = sample_instance(lat, 0.6, seed=8)
    assert abs(inst.bonds.mean() - 0.6) < 0.01
    again = sample_instance(lat, 0.6, seed=8)
    assert np.array_equal(inst.bonds, again.bonds)


def test_component_stats_full_and_empty(square16):
    full = component_stats(sample_instance(square16, 1.0, seed=0))
    assert full.n_components == 1 and full.sizes[0] == square16.n_nodes
    assert full.wrapping().all()
    empty = component_stats(sample_instance(square16, 0.0, seed=0))
    assert empty.n_components == square16.n_nodes
    assert not empty.wrapping().any()


def test_component_stats_hand_example():
    lat = build_named("square-2d", (2, 2))
    ea, eb = lat.edge_a.tolist(), lat.edge_b.tolist()
    a00, a10 = lat.node_index((0, 0), 0), lat.node_index((1, 0), 0)
    a01 = lat.node_index((0, 1), 0)
    # both x-bonds between (0,0) and (1,0) close a loop around the x axis;
    # one y-bond joins (0,0) to (0,1); one further bond returns a
    x_bonds = [e for e in range(lat.n_edges) if {ea[e], eb[e]} == {a00, a10}]
    y_bond = next(e for e in range(lat.n_edges) if {ea[e], eb[e]} == {a00, a01})
    bonds = np.zeros(lat.n_edges, dtype=bool)
    bonds[x_bonds + [y_bond]] = True
    inst = sample_instance(lat, 0.0, seed=0)
    inst.bonds = bonds
    stats = component_stats(inst)
    assert sorted(stats.sizes.tolist()) == [1, 3]
    big = stats.largest
    assert stats.sizes[big] == 3
    assert stats.wraps[big].tolist() == [True, False]


def test_component_stats_site_vacancy(square16):
    inst = sample_instance(square16, 1.0, 0.5, seed=1)
    stats = component_stats(inst)
    assert stats.sizes.sum() == inst.sites.sum()
    assert np.all(stats.labels[~inst.sites] == -1)
