import math

import numpy as np
import pytest

from freqrestrict.analytic import AnalyticFunction, multiply, nth_derivative
from freqrestrict.decomposition import (Decomposition, DecompositionPiece,
                                        decomposition_certificate, full_decompose,
                                        monomial_decompose, oscillation_decompose,
                                        polynomial_decompose, reduce_to_class, sign_components,
                                        verify_grid, verify_piece, search_grid)
from freqrestrict.errors import (DepthExceeded, NotInClass, RadiusTooSmall, VanishingFactor,
                                 ZeroFunction)
from freqrestrict.series import exp_series, planted_curve, poly_times_exp


def poly(c):
    return AnalyticFunction.polynomial(c)


def covers(pieces, lo, hi):
    ps = sorted(pieces, key=lambda p: p.lo)
    return (ps[0].lo == lo and ps[-1].hi == hi
            and all(abs(a.hi - b.lo) <= 1e-12 for a, b in zip(ps, ps[1:])))


def from_roots(roots):
    """Product form: accurate next to multiple roots, unlike Horner on coefficients."""
    return lambda t: np.real(np.prod([t - r for r in roots], axis=0))


def comparable(f, piece, t):
    g = np.abs(f(t)) / np.abs(t - piece.center) ** piece.exponent
    return piece.lower_const <= g.min() and g.max() <= piece.upper_const


# pieces -------------------------------------------------------------------------

def test_piece_invariants():
    with pytest.raises(ValueError):
        DecompositionPiece(0, 1, 0.5, 1, 1, 2)
    with pytest.raises(ValueError):
        DecompositionPiece(0, 1, 0, 1, 2, 1)
    assert DecompositionPiece(0, 1, 1, 1, 1, 2).ratio == 2


def test_verification_grid_is_independent():
    s = set(search_grid(0.0, 1.0, 5.0))
    v = verify_grid(0.0, 1.0, 5.0)
    assert v.size > 1024
    assert len(s & set(v[1:-1])) == 0


def test_csv_round_trip():
    d = Decomposition([DecompositionPiece(0, 0.5, 0, 1, 0.9, 1.1, -1),
                       DecompositionPiece(0.5, 1, 2, 0, 1.0, 3.0, 1)], "x")
    back = Decomposition.from_csv(d.to_csv())
    assert back.pieces == d.pieces
    assert d.to_csv().splitlines()[0] == "lo,hi,center,exponent,lower_const,upper_const,sign"


# oscillation -----------------------------------------------------------------------

def test_oscillation_examples():
    assert oscillation_decompose(poly([1.0]), -1, 1, 0.5) == [(-1, 1)]
    assert oscillation_decompose(exp_series(1.0), -0.1, 0.1, 0.5) == [(-0.1, 0.1)]
    psi = exp_series(8.0)
    out = oscillation_decompose(psi, -1, 1, 0.05)
    assert covers([DecompositionPiece(a, b, a, 0, 1, 1) for a, b in out], -1, 1)
    depth = max(round(math.log2(2 / (b - a))) for a, b in out)
    assert len(out) <= 2 ** depth
    for a, b in out:
        t = verify_grid(a, b, math.inf)
        v = np.exp(t)
        assert v.max() / v.min() - 1 < 0.05


def test_oscillation_rejects_vanishing_factor():
    with pytest.raises(VanishingFactor):
        oscillation_decompose(poly([-0.5, 1]), 0, 1, 0.5)


def test_oscillation_depth_cap():
    with pytest.raises(DepthExceeded):
        oscillation_decompose(exp_series(8.0), -1, 1, 1e-6, depth_max=4)


# polynomial -------------------------------------------------------------------------

def test_polynomial_examples():
    (p,) = polynomial_decompose([0, 1], 1, 2)
    assert (p.center, p.exponent) == (0, 1)
    assert p.lower_const == pytest.approx(0.95) and p.upper_const == pytest.approx(1.05)
    # the two 5% margins give 1.05 / 0.95
    assert p.ratio == pytest.approx(1.05 / 0.95, rel=1e-12)
    (p,) = polynomial_decompose([5.0], -3, 7)
    assert p.exponent == 0 and p.lower_const == pytest.approx(4.75) and p.upper_const == pytest.approx(5.25)
    f = poly([0, -3, 1])
    pieces = polynomial_decompose(f, 1, 2)
    assert covers(pieces, 1, 2)
    for q in pieces:
        assert q.center in (0, 3) and q.exponent == 1
        assert comparable(f, q, verify_grid(q.lo, q.hi, q.center))


@pytest.mark.parametrize("k", range(0, 11))
def test_powers_give_one_piece(k):
    c = [0.0] * k + [1.0]
    (p,) = polynomial_decompose(c, 1, 2)
    assert (p.center, p.exponent) == (0 if k else 1, k)


def test_polynomial_splits_at_interior_roots():
    c = np.polynomial.polynomial.polyfromroots([-0.5, 0.25, 0.7])
    pieces = polynomial_decompose(c, -1, 1)
    assert covers(pieces, -1, 1)
    edges = {p.lo for p in pieces} | {p.hi for p in pieces}
    assert {-0.5, 0.25, 0.7} <= {round(e, 12) for e in edges}
    f = from_roots([-0.5, 0.25, 0.7])
    for q in pieces:
        assert not q.lo < q.center < q.hi
        assert q.exponent <= 3
        assert comparable(f, q, verify_grid(q.lo, q.hi, q.center))


def test_polynomial_with_complex_roots_near_interval():
    c = np.polynomial.polynomial.polyfromroots([0.5 + 0.01j, 0.5 - 0.01j]).real
    pieces = polynomial_decompose(poly(c), 0, 1)
    assert covers(pieces, 0, 1)
    for q in pieces:
        assert q.ratio <= 16
        assert comparable(from_roots([0.5 + 0.01j, 0.5 - 0.01j]), q,
                          verify_grid(q.lo, q.hi, q.center))


def test_polynomial_double_root_at_endpoint():
    c = np.polynomial.polynomial.polyfromroots([1.0, 1.0, 3.0])
    pieces = polynomial_decompose(c, 1, 2)
    assert [(p.center, p.exponent) for p in pieces][0] == (1.0, 2)
    for q in pieces:
        assert comparable(from_roots([1.0, 1.0, 3.0]), q, verify_grid(q.lo, q.hi, q.center))


def test_polynomial_zero_rejected():
    with pytest.raises(ZeroFunction):
        polynomial_decompose([0.0, 0.0], 0, 1)


# monomial ----------------------------------------------------------------------------

def test_monomial_examples():
    (p,) = monomial_decompose(exp_series(8.0), -0.5, 0.5)
    assert p.exponent == 0
    f = poly_times_exp([-2, 1], 8.0)
    pieces = monomial_decompose(f, -1, 1)
    assert covers(pieces, -1, 1)
    for q in pieces:
        assert (q.center, q.exponent) == (2, 1)
        assert comparable(f, q, verify_grid(q.lo, q.hi, q.center, 4096))
    (p,) = monomial_decompose(poly([0, 0, 1]), 1, 2)
    assert (p.center, p.exponent) == (0, 2)


def test_monomial_radius_check():
    with pytest.raises(RadiusTooSmall):
        monomial_decompose(exp_series(4.0), -1, 1)


# signs -----------------------------------------------------------------------------

def test_sign_examples():
    assert sign_components(exp_series(8.0), -1, 1) == [(-1, 1, 1)]
    assert sign_components(poly([0, 1]), -1, 1) == [(-1, 0.0, -1), (0.0, 1, 1)]
    c = np.polynomial.polynomial.polyfromroots([0.3, -0.4])
    comps = sign_components(poly_times_exp(c, 8.0), -1, 1)
    assert [s for *_, s in comps] == [1, -1, 1]
    assert comps[0][1] == pytest.approx(-0.4, abs=1e-12) and comps[1][1] == pytest.approx(0.3, abs=1e-12)


# full ---------------------------------------------------------------------------------

def test_full_moment_example():
    phi = poly([0, 0, 0, 1 / 6])
    with pytest.raises(NotInClass):
        full_decompose(phi, 3, 1, 2)
    d = full_decompose(phi, 3, 1, 2, normalize=True)
    (p,) = d.pieces
    assert (p.exponent, p.sign) == (0, 1)


def test_reduce_to_class_keeps_top_derivative():
    phi = planted_curve([0, 1])
    red = reduce_to_class(phi, 3, 0.4)
    t = np.linspace(-1, 1, 9)
    assert np.allclose(nth_derivative(red, 3)(t), nth_derivative(phi, 3)(t), rtol=1e-13)
    for k in range(3):
        assert abs(nth_derivative(red, k)(0.4).real) < 1e-12


@pytest.mark.parametrize("name, center, signs", [
    ("t-2", {2.0}, {-1}),
    ("t", {0.0}, {-1, 1}),
    ("t^2", {0.0}, {1}),
])
def test_full_planted_family(planted_family, name, center, signs):
    phi = planted_family[name]
    d = full_decompose(phi, 3, -1, 1)
    assert covers(d.pieces, -1, 1)
    assert {p.center for p in d.pieces} == center
    assert {p.sign for p in d.pieces} == signs
    expected_k = 2 if name == "t^2" else 1
    assert {p.exponent for p in d.pieces} == {expected_k}
    assert max(p.exponent for p in d.pieces) <= 2 * math.ceil(d.stats["frequency_budget"])
    cert = decomposition_certificate(d, nth_derivative(phi, 3))
    assert cert["all_pass"]
    if name == "t":
        assert any(p.hi == 0.0 for p in d.pieces)


def test_full_pieces_refine_sign_components(planted_family):
    phi = planted_family["t"]
    fd = nth_derivative(phi, 3)
    comps = sign_components(fd, -1, 1)
    for p in full_decompose(phi, 3, -1, 1).pieces:
        inside = [c for c in comps if c[0] <= p.lo and p.hi <= c[1]]
        assert len(inside) == 1 and inside[0][2] == p.sign


def test_full_radius_too_small():
    phi = AnalyticFunction.polynomial([0, 0, 0, 1], radius=10.0)
    with pytest.raises(RadiusTooSmall, match="64"):
        full_decompose(phi, 3, -1, 1)


def test_full_reports_both_radius_requirements(planted_family):
    stats = full_decompose(planted_family["t-2"], 3, -1, 1).stats
    assert stats["required_radius_decomposition"] == 64
    assert stats["required_radius_restriction"] == 512


def test_full_is_deterministic(planted_family):
    a = full_decompose(planted_family["t"], 3, -1, 1)
    b = full_decompose(planted_family["t"], 3, -1, 1)
    assert a.to_csv() == b.to_csv()


def test_verify_piece_reports_failure():
    f = poly([0, 1])
    bad = DecompositionPiece(1, 2, 0, 1, 1.01, 1.02)
    assert not verify_piece(f, bad)["pass"]


def test_root_at_rounding_distance_from_edge_is_snapped():
    d = full_decompose(planted_curve([-1e-13, 1.0]), 3, -1.0, 1.0)
    assert covers(d.pieces, -1, 1)
    assert all(not p.lo < p.center < p.hi for p in d.pieces)


def test_close_roots_decompose_and_verify():
    phi = planted_curve(np.polynomial.polynomial.polyfromroots([0.0, 1e-6]))
    d = full_decompose(phi, 3, -1.0, 1.0)
    cert = decomposition_certificate(d, nth_derivative(phi, 3))
    assert cert["all_pass"] and len(d.pieces) > 2
    assert all("unresolved" in row for row in cert["pieces"])
