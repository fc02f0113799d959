import math

import numpy as np
import pytest

from steadyent import experiments as ex
from steadyent import models as md
from steadyent import qcore
from steadyent.errors import ValidationError


def small_config(**kw):
    base = dict(samples=40, j_over_gamma_grid=(0.3, 3.0), seed=99, bins=10)
    base.update(kw)
    return ex.EnsembleConfig(**base)


def test_substreams_are_distinct_and_reproducible():
    a = ex.substream(5, 0, 0).standard_normal(4)
    assert np.array_equal(a, ex.substream(5, 0, 0).standard_normal(4))
    for other in ((5, 0, 1), (5, 1, 0), (6, 0, 0)):
        assert not np.array_equal(a, ex.substream(*other).standard_normal(4))


def test_config_validation():
    for bad in (dict(samples=0), dict(j_over_gamma_grid=(0.0,)), dict(j_over_gamma_grid=()),
                dict(bins=1), dict(seed=-1), dict(seed=2**64), dict(quantity="entropy"),
                dict(n_qubits=3)):
        with pytest.raises(ValidationError):
            small_config(**bad)
    with pytest.raises(ValidationError):
        ex.EnsembleConfig.from_json({"samples": 10, "colour": "red"})
    cfg = ex.EnsembleConfig.from_json({"samples": 10, "quantity": "fid_psi_plus"})
    assert cfg.quantity is ex.Quantity.FID_PSI_PLUS


def test_histogram_invariants():
    cfg = small_config()
    res = ex.run_ensemble(cfg)
    assert res.failures == 0
    width = 1.0 / cfg.bins
    for j in cfg.j_over_gamma_grid:
        rows = [r for r in res.histogram.rows if r[0] == j]
        assert len(rows) == cfg.bins
        assert sum(r[3] for r in rows) == cfg.samples
        assert math.fsum(r[4] * width for r in rows) == pytest.approx(1.0, abs=1e-9)
        assert rows[0][1] == 0.0 and rows[-1][2] == 1.0


def test_ensemble_matches_independent_aggregation():
    """Values drawn sample by sample in shuffled order give the same table."""
    cfg = small_config()
    res = ex.run_ensemble(cfg)
    order = np.random.default_rng(0).permutation(cfg.samples)
    edges = np.linspace(0, 1, cfg.bins + 1)
    for g, j in enumerate(cfg.j_over_gamma_grid):
        vals = [ex.sample_measures(cfg.seed, g, int(i), j)["concurrence"] for i in order]
        counts, _ = np.histogram(vals, bins=edges)
        got = [r[3] for r in res.histogram.rows if r[0] == j]
        assert got == counts.tolist()
        s = res.summary[g]
        assert s.maximum == max(vals) and s.minimum == min(vals)
        assert s.mean == pytest.approx(np.mean(vals), abs=1e-15)


def test_ensemble_byte_identical_and_worker_independent():
    cfg = small_config(quantity="fid_phi_plus")
    a = ex.run_ensemble(cfg)
    b = ex.run_ensemble(cfg)
    c = ex.run_ensemble(cfg, workers=2)
    assert a.histogram.to_csv() == b.histogram.to_csv() == c.histogram.to_csv()
    assert a.summary_csv() == b.summary_csv() == c.summary_csv()
    assert ex.run_ensemble(small_config(seed=100)).histogram.to_csv() != ex.run_ensemble(
        small_config()).histogram.to_csv()


def weak_coupling_means(samples=200):
    grid = (0.01,)
    conc = ex.run_ensemble(ex.EnsembleConfig(samples=samples, j_over_gamma_grid=grid, seed=3))
    phi = ex.run_ensemble(ex.EnsembleConfig(samples=samples, j_over_gamma_grid=grid, seed=3,
                                            quantity="fid_phi_plus"))
    return conc.summary[0].mean, phi.summary[0].mean


def test_weak_coupling_limit():
    """First order in J/gamma: rho_03 = i H_03/gamma, so C = 2|H_03|/gamma.

    |H_03| is Rayleigh distributed with scale J/sqrt2, giving mean
    sqrt(pi) J/gamma and standard deviation 2 (J/sqrt2) sqrt((4 - pi)/2).
    """
    j, n = 0.01, 200
    mean_c, mean_phi = weak_coupling_means(n)
    se = 2 * (j / math.sqrt(2)) * math.sqrt((4 - math.pi) / 2) / math.sqrt(n)
    assert abs(mean_c - math.sqrt(math.pi) * j) <= 5 * se
    assert 0.45 <= mean_phi <= 0.52


@pytest.mark.xfail(strict=True, reason="mean concurrence is sqrt(pi) J/gamma ~ 0.018 with this rate normalization")
def test_weak_coupling_mean_concurrence_below_one_percent():
    mean_c, _ = weak_coupling_means()
    assert mean_c <= 0.01


def test_summary_csv_layout():
    text = ex.run_ensemble(small_config()).summary_csv().splitlines()
    assert text[0] == "j_over_gamma,count,failures,min,max,mean,frac_above_0.35,frac_above_0.5"
    assert len(text) == 3


# Ising curves ----------------------------------------------------------------------------

def test_ising_curve_peak():
    """At delta = 0 the peak sits where |x| = gamma/(2J) is the golden ratio."""
    golden = (1 + math.sqrt(5)) / 2
    j_peak = 1 / (2 * golden)
    grid = np.linspace(0.2, 0.5, 3001)
    rows = ex.ising_curve(0.0, grid)
    conc = np.array([r[1] for r in rows])
    k = int(np.argmax(conc))
    assert grid[k] == pytest.approx(j_peak, abs=1e-4)
    assert conc[k] == pytest.approx((math.sqrt(5) - 1) / 4, abs=1e-8)


def test_ising_curve_limits():
    strong, = ex.ising_curve(0.0, [1e6])
    assert strong[1] == 0.0
    assert np.allclose(strong[2:], 0.25, atol=1e-6)
    weak, = ex.ising_curve(0.0, [1e-6])
    assert weak[4] <= 1e-6 and weak[5] <= 1e-6
    with pytest.raises(ValidationError):
        ex.ising_curve(0.0, [])


def test_ising_csv():
    text = ex.rows_to_csv(ex.ISING_COLUMNS, ex.ising_curve(1.0, [0.5, 2.0]))
    lines = text.splitlines()
    assert lines[0] == ",".join(ex.ISING_COLUMNS) and len(lines) == 3


# optimal Hamiltonians --------------------------------------------------------------------

@pytest.mark.parametrize("sign", [+1, -1])
def test_verify_optimal_bounds(sign):
    rep = ex.verify_optimal(10, 10, sign)
    assert rep.concurrence >= 0.49 and rep.f_psi >= 0.49


def test_verify_optimal_converges():
    dist = [ex.verify_optimal(r, r).trace_distance_to_rho_star for r in (10, 30, 100)]
    assert dist[0] > dist[1] > dist[2]
    assert dist[2] <= 0.01
    with pytest.raises(ValidationError):
        ex.verify_optimal(0.5, 10)


def test_nqubit_two_reduces_to_optimal():
    rep = ex.nqubit_pipeline(2, 10, 10, budget=None)
    opt = ex.verify_optimal(10, 10, +1)
    assert np.max(np.abs(rep.state - opt.state)) <= 1e-12
    assert rep.mixed_concurrence_bound is None


@pytest.mark.parametrize("n", [3, 4])
def test_nqubit_fidelity(n):
    rep = ex.nqubit_pipeline(n, 15, 15, budget=None)
    assert rep.fidelity_to_target >= 0.95
    assert rep.pure_W_concurrence == pytest.approx(math.sqrt(2 * (1 - 1 / n)), abs=1e-10)
    delta = 15.0 * 15.0
    assert rep.crossing_j == pytest.approx(delta / (1 - n), rel=0.01)


def test_nqubit_validation():
    with pytest.raises(ValidationError):
        ex.nqubit_pipeline(5, 15, 15)


def test_rotating_frame_agrees_with_effective_model():
    rep = ex.rotating_frame_check()
    assert rep.fidelity >= 0.95
    assert qcore.trace_distance(rep.target, md.rho_star(+1)) < 0.1
