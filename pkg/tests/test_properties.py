"""Randomized invariants (hypothesis)."""

import math
import os

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from freqrestrict.analytic import (AnalyticFunction, Disc, derivative, evaluate, factor_out_zeros,
                                   frequency, frequency_monotone_scan, nth_derivative, recenter,
                                   roots_in_disc, zero_count)
from freqrestrict.decomposition import (decomposition_certificate, full_decompose,
                                        sign_components)
from freqrestrict.errors import BoundaryZero, NoConvergence, TailTooLarge
from freqrestrict.geometry import (SimpleCurve, affine_density, c_alpha, geometric_ratio,
                                   integral_bound_check, jacobian_direct)
from freqrestrict.series import exp_series, planted_curve

# recorded calibration constant for the derivative frequency bound
KAPPA = 2.0

# FREQRESTRICT_EXAMPLES_SCALE=10 gives a heavier randomized run
SCALE = float(os.environ.get("FREQRESTRICT_EXAMPLES_SCALE", "1"))
seeds = st.integers(0, 2 ** 32 - 1)


def budget(n):
    return settings(deadline=None, max_examples=max(1, int(n * SCALE)))


fast = budget(200)


def random_series(seed, vanish_at_center=False):
    """Coefficients decaying like (s R)^-n with s in [1.5, 4]: admissible at R."""
    rng = np.random.default_rng(seed)
    R = rng.uniform(0.5, 4.0)
    s = rng.uniform(1.5, 4.0)
    T = int(rng.integers(20, 60))
    g = rng.standard_normal(T + 1) * rng.uniform(0, 1, T + 1) ** 6
    g[0] = 0.0 if vanish_at_center else g[0] + 0.1 * np.sign(g[0] + 1e-300)
    return AnalyticFunction(0.0, R, g * (R * s) ** -np.arange(T + 1.0))


def random_poly(seed):
    rng = np.random.default_rng(seed)
    real = list(rng.uniform(-3, 3, int(rng.integers(0, 6))))
    pairs = rng.uniform(-2, 2, (int(rng.integers(0, 3)), 2))
    roots = real + [complex(a, b) for a, b in pairs] + [complex(a, -b) for a, b in pairs]
    if not roots:
        roots = [0.5]
    return AnalyticFunction.from_roots(roots, lead=rng.uniform(0.5, 2.0)), len(roots)


# analytic core --------------------------------------------------------------------

@fast
@given(seeds)
def test_frequency_monotone(seed):
    f = random_series(seed)
    values = [n for _, n in frequency_monotone_scan(f, np.geomspace(f.radius / 64, f.radius, 16))]
    assert all(b >= a for a, b in zip(values, values[1:]))


@fast
@given(seeds, st.floats(-3, 3), st.floats(0.05, 20))
def test_polynomial_frequency_at_most_twice_degree(seed, center, R):
    p, degree = random_poly(seed)
    q = recenter(p, center)
    assert frequency(q, R) <= 2 * degree + 1e-9


@fast
@given(seeds)
def test_zero_count_bounded_by_frequency(seed):
    f = random_series(seed)
    try:
        count = zero_count(f, Disc(0.0, f.radius / 4))
    except (BoundaryZero, NoConvergence):
        assume(False)
    assert count <= frequency(f, f.radius) + 0.5


@budget(60)
@given(seeds, st.floats(0.2, 3.0))
def test_zero_count_of_polynomials(seed, radius):
    p, _ = random_poly(seed)
    try:
        count = zero_count(p, Disc(0.0, radius))
    except (BoundaryZero, NoConvergence):
        assume(False)
    assert count <= frequency(p, 4 * radius) + 0.5
    assert sum(m for _, m in roots_in_disc(p, Disc(0.0, radius))) == count


@budget(60)
@given(seeds)
def test_factorization_reconstructs(seed):
    p, _ = random_poly(seed)
    f = p * exp_series(8.0)
    disc = Disc(0.0, 1.5)
    try:
        fac = factor_out_zeros(f, disc)
        assert zero_count(fac.residual, disc) == 0
    except (BoundaryZero, NoConvergence):
        # a zero on or within ~1e-3 of the contour
        assume(False)
    z = disc.boundary(37) * 0.9 + 0.1j
    lhs = evaluate(fac.poly, z) * evaluate(fac.residual, z)
    assert np.max(np.abs(lhs - evaluate(f, z)) / np.abs(evaluate(f, z))) <= 1e-8


@fast
@given(seeds)
def test_derivative_frequency_bounded(seed):
    f = random_series(seed, vanish_at_center=True)
    N = frequency(f, f.radius)
    try:
        fp = derivative(f)
    except TailTooLarge:
        assume(False)
    assert frequency(fp, f.radius / 2) / (N + 1) <= KAPPA


# decomposition ---------------------------------------------------------------------

@budget(25)
@given(st.lists(st.floats(-3, 3).filter(lambda r: abs(abs(r) - 1) > 1e-6), min_size=1, max_size=2))
def test_decomposition_invariants(roots):
    # closer pairs need more than the default 24 bisections (DepthExceeded)
    assume(len(roots) == 1 or roots[0] == roots[1] or abs(roots[0] - roots[1]) >= 1e-6)
    poly = np.polynomial.polynomial.polyfromroots(roots)
    phi = planted_curve(poly)
    decomp = full_decompose(phi, 3, -1.0, 1.0)
    fd = nth_derivative(phi, 3)
    ps = decomp.pieces
    assert ps[0].lo == -1.0 and ps[-1].hi == 1.0
    assert all(abs(a.hi - b.lo) <= 1e-12 for a, b in zip(ps, ps[1:]))
    cert = decomposition_certificate(decomp, fd)
    assert cert["all_pass"]
    assert all(p.ratio <= 16 for p in ps)
    budget = decomp.stats["frequency_budget"]
    assert max(p.exponent for p in ps) <= 2 * math.ceil(budget)
    comps = sign_components(fd, -1.0, 1.0)
    for p in ps:
        owners = [c for c in comps if c[0] - 1e-12 <= p.lo and p.hi <= c[1] + 1e-12]
        assert len(owners) == 1 and owners[0][2] == p.sign


# geometry --------------------------------------------------------------------------

def increasing(rng, d):
    return np.sort(rng.uniform(-1, 1, d))


@fast
@given(seeds, st.sampled_from([2, 3, 4]))
def test_jacobian_antisymmetry(seed, d):
    rng = np.random.default_rng(seed)
    curve = SimpleCurve(d, planted_curve([0.5, 1.0], d=d))
    t = increasing(rng, d)
    i, j = sorted(rng.choice(d, 2, replace=False))
    s = t.copy()
    s[[i, j]] = s[[j, i]]
    J, Js = jacobian_direct(curve, t), jacobian_direct(curve, s)
    assert Js == pytest.approx(-J, rel=1e-9, abs=1e-300)
    perm = rng.permutation(d)
    assert geometric_ratio(curve, t[perm]) == pytest.approx(geometric_ratio(curve, t), rel=1e-9)


@fast
@given(st.floats(-5, 5), st.floats(1e-3, 5), st.floats(0, 6), st.floats(1e-3, 5), st.booleans())
def test_integral_bound(t, length, alpha, gap, left):
    tau = t + length
    a = t - gap if left else tau + gap
    lhs, rhs, ok = integral_bound_check(t, tau, a, alpha)
    assert ok and lhs >= rhs
    assert c_alpha(alpha) <= 0.5


@fast
@given(st.floats(-1, 1), st.floats(0.01, 100), st.sampled_from([2, 3, 4, 5]))
def test_affine_density_scaling(t, M, d):
    base = SimpleCurve.moment(d)
    phi = np.zeros(d + 1)
    phi[d] = M
    scaled = SimpleCurve(d, AnalyticFunction.polynomial(phi))
    expected = M ** (2 / (d * d + d)) * affine_density(base, t)
    assert affine_density(scaled, t) == pytest.approx(expected, rel=1e-13)
