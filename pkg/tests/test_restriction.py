import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from freqrestrict.analytic import AnalyticFunction
from freqrestrict.decomposition import DecompositionPiece
from freqrestrict.errors import (BudgetExceeded, CenterInside, CostGuard, InsufficientGaps,
                                 OutOfRange)
from freqrestrict.geometry import SimpleCurve
from freqrestrict.restriction import (GridSpec, NormReport, TestFunction, comoving_grid,
                                      counterexample_scan, dyadic_partition, exponent_pair,
                                      extension_eval, extension_norm, extension_on_grid,
                                      gnuplot_data, longest_increasing_run,
                                      multilinear_decay_experiment, rescaled_piece, scale_curve,
                                      scan_csv, sjolin_chen_curve, sjolin_chen_derivatives,
                                      source_norm)

PAIR = exponent_pair(Fraction(12, 11), 3)


def curve(coeffs, d=3):
    return SimpleCurve(d, AnalyticFunction.polynomial(coeffs))


# exponents --------------------------------------------------------------------------

def test_exponent_examples():
    assert (PAIR.p_prime, PAIR.q) == (12.0, 2.0)
    p = 7 / 6 - 1e-3
    pair = exponent_pair(p, 3)
    assert pair.p_prime == pytest.approx(p / (p - 1), rel=1e-15)
    assert pair.q == pytest.approx(pair.p_prime / 6, rel=1e-15)
    assert 6.96 < pair.p_prime < 7.04


@pytest.mark.parametrize("p", [1.0, 7 / 6, 1.3, 0.5])
def test_exponent_out_of_range(p):
    with pytest.raises(OutOfRange, match="admissible"):
        exponent_pair(p, 3)


# pointwise extension ---------------------------------------------------------------

def test_zero_frequency(moment3):
    f = TestFunction()
    assert extension_eval(moment3, f, [0, 0, 0], weighted=False) == pytest.approx(1, abs=1e-14)
    assert extension_eval(moment3, f, [0, 0, 0]) == pytest.approx(12 ** (1 / 6), rel=1e-14)
    bump = TestFunction("bump", 0.2, 0.9)
    # substitute t = 0.55 + 0.35 u so the integrand lives on (-1, 1)
    exact = 0.35 * mpmath.quad(lambda u: mpmath.exp(-1 / (1 - u * u)), [-1, 0, 1])
    assert extension_eval(moment3, bump, [0, 0, 0], weighted=False) == pytest.approx(float(exact), rel=1e-10)


@pytest.mark.parametrize("xi", [0.3, 3.7, 25.0, -11.5])
def test_first_coordinate_is_fourier_transform(moment3, xi):
    val = extension_eval(moment3, TestFunction(), [xi, 0, 0], weighted=False)
    exact = (np.exp(2j * np.pi * xi) - 1) / (2j * np.pi * xi)
    assert abs(val - exact) <= 1e-8


def test_budget_exceeded(moment3):
    f = TestFunction()
    with pytest.raises(BudgetExceeded):
        extension_eval(moment3, f, [1e5, 0, 0], panel_cap=64)
    val, info = extension_eval(moment3, f, [1e5, 0, 0], panel_cap=64, allow_degraded=True,
                               return_info=True)
    assert info.budget_limited and info.panels == 64


def test_grid_matches_pointwise(moment3):
    grid = GridSpec(4.0, 8, 3)
    f = TestFunction("bump", 0.0, 1.0)
    vals, _ = extension_on_grid(moment3, f, grid)
    rng = np.random.default_rng(3)
    for idx in rng.integers(0, 8, size=(6, 3)):
        x = [grid.axis(k)[i] for k, i in enumerate(idx)]
        # panel counts differ between the two paths, so agreement is at quadrature accuracy
        assert abs(vals[tuple(idx)] - extension_eval(moment3, f, x)) <= 1e-8


# norms ----------------------------------------------------------------------------

def test_grid_spec_guards():
    with pytest.raises(ValueError):
        GridSpec(8.0, 4, 3)
    with pytest.raises(CostGuard):
        GridSpec(8.0, 300, 3)
    assert GridSpec((1.0, 2.0, 3.0), 8, 3).half_widths == (1.0, 2.0, 3.0)


def test_zero_input_flag(moment3):
    rep = extension_norm(moment3, TestFunction(amplitude=0.0), PAIR, GridSpec(4.0, 8, 3))
    assert rep.ratio is None and "ZeroInput" in rep.flags


def test_source_norm_constant_density(moment3):
    assert source_norm(moment3, TestFunction(), 2.0) == pytest.approx(12 ** (1 / 12), rel=1e-14)


def test_norm_self_convergence(moment3):
    f = TestFunction()
    a = extension_norm(moment3, f, PAIR, GridSpec(8.0, 32, 3)).ratio
    b = extension_norm(moment3, f, PAIR, GridSpec(8.0, 64, 3)).ratio
    assert math.isfinite(a) and abs(a / b - 1) <= 0.05


def test_report_json(moment3):
    rep = extension_norm(moment3, TestFunction(), PAIR, GridSpec(4.0, 8, 3))
    d = rep.to_dict()
    assert d["ratio"] == rep.extension_norm / rep.source_norm
    assert d["grid"]["n"] == 8 and "BoxTruncated" in d["flags"]


@pytest.mark.parametrize("M", [4.0, 0.25])
def test_critical_line_scaling_comoving(M):
    base = curve([0, 0, 0, 1, 0.3])
    grid = GridSpec(8.0, 32, 3)
    f = TestFunction()
    r0 = extension_norm(base, f, PAIR, grid).ratio
    r1 = extension_norm(scale_curve(base, M), f, PAIR, comoving_grid(grid, M)).ratio
    assert abs(r1 / r0 - 1) <= 1e-10


def test_off_critical_line_scaling_is_detected():
    # q' = 4 instead of 2: the prediction is a factor M^(1/6 - 1/12 - 1/24)
    base = curve([0, 0, 0, 1])
    grid = GridSpec(8.0, 16, 3)
    f = TestFunction()
    ext0 = extension_norm(base, f, PAIR, grid)
    scaled = extension_norm(scale_curve(base, 4.0), f, PAIR, comoving_grid(grid, 4.0))
    src = lambda c: source_norm(c, f, 4.0)
    r0 = ext0.extension_norm / src(base)
    r1 = scaled.extension_norm / src(scale_curve(base, 4.0))
    assert r1 / r0 == pytest.approx(4.0 ** (1 / 6 - 1 / 12 - 1 / 24), rel=1e-10)


# dyadic ---------------------------------------------------------------------------

def test_dyadic_examples():
    assert dyadic_partition(1, 2, 0) == [(1, 1.0, 2.0)]
    assert dyadic_partition(0.3, 2.5, 0) == [(-1, 0.3, 0.5), (0, 0.5, 1.0), (1, 1.0, 2.0), (2, 2.0, 2.5)]
    assert dyadic_partition(-2, -1, 0) == [(1, -2.0, -1.0)]


def test_dyadic_center_at_endpoint():
    parts = dyadic_partition(0, 1, 0)
    assert parts[-1] == (0, 0.5, 1.0)
    assert all(b == a2 for (_, _, b), (_, a2, _) in zip(parts[::-1][1:], parts[::-1]))


def test_dyadic_center_inside():
    with pytest.raises(CenterInside):
        dyadic_partition(0, 1, 0.5)


# counterexample --------------------------------------------------------------------

def test_counterexample_precondition():
    sjolin_chen_curve(1.0, 3.0)
    with pytest.raises(OutOfRange):
        sjolin_chen_curve(1.0, 1.0)


def test_sjolin_chen_derivatives_match_mpmath():
    fs = sjolin_chen_derivatives(1.0, 3.0, 3)
    g = lambda t: mpmath.exp(-1 / t) * mpmath.sin(t ** -3)
    for t in (0.4, 0.7, 1.3):
        for k in range(4):
            assert fs[k](t) == pytest.approx(float(mpmath.diff(g, t, k)), rel=1e-10)


def test_rescaled_piece_is_reparametrisation():
    fs = sjolin_chen_derivatives(1.0, 3.0, 3)
    c, S = rescaled_piece(fs, 3, 0.25, 0.25)
    s = np.linspace(0, 1, 9)
    assert np.allclose(c.deriv(0, s) * S, fs[0](0.25 + 0.25 * s))
    assert np.allclose(c.deriv(3, s) * S, 0.25 ** 3 * fs[3](0.25 + 0.25 * s))
    assert np.max(np.abs(c.deriv(0, np.linspace(0, 1, 4097)))) == pytest.approx(1.0, rel=1e-6)


def test_counterexample_small_scan():
    rows = counterexample_scan(1.0, 3.0, 3, m_max=3, grid=GridSpec(8.0, 16, 3))
    ratios = [r.ratio for r in rows]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert scan_csv(rows).splitlines()[0] == "scale,ratio,flags"
    assert len(gnuplot_data([1, 2, 3], ratios).splitlines()) == 3


def test_counterexample_budget_reported_per_scale():
    rows = counterexample_scan(1.0, 3.0, 3, m_max=2, grid=GridSpec(8.0, 8, 3), panel_cap=300)
    assert rows[0].ratio is not None
    assert rows[1].ratio is None and rows[1].flags == ["BudgetExceeded"]


def test_longest_increasing_run():
    assert longest_increasing_run([1, 2, 3, 2, 3, 4, 5]) == 4
    assert longest_increasing_run([1, None, 2, 3]) == 2
    assert longest_increasing_run([]) == 0


# multilinear ------------------------------------------------------------------------

def test_multilinear_insufficient_gaps(moment3):
    with pytest.raises(InsufficientGaps):
        multilinear_decay_experiment(moment3, DecompositionPiece(0, 1, 0, 0, 1, 1), [2, 2, 2],
                                     PAIR, GridSpec(4.0, 8, 3))


def test_multilinear_decay_positive_and_stable(moment3):
    piece = DecompositionPiece(0, 1, 0, 0, 1, 1)
    a = multilinear_decay_experiment(moment3, piece, [2, 4, 6], PAIR, GridSpec(8.0, 16, 3))
    b = multilinear_decay_experiment(moment3, piece, [2, 4, 6], PAIR, GridSpec(8.0, 32, 3))
    assert a.K_fit > 0 and b.K_fit > 0
    assert abs(a.K_fit / b.K_fit - 1) <= 0.5
