"""Interval decompositions on which a function is comparable to a monomial.

Pipeline for ``phi`` on ``[lo, hi]``:

1. ``factor_out_zeros`` splits ``phi = p * psi`` on ``D(a, 4r)``;
2. ``oscillation_decompose`` cuts ``[lo, hi]`` until ``psi`` is nearly
   constant (ratio oscillation below ``eps``);
3. ``polynomial_decompose`` cuts each of those pieces until
   ``|p(t)| ~ |t - a_j|^k_j`` with a bounded ratio;
4. constants are re-measured against ``phi`` itself.

``full_decompose`` runs this on the ``d``-th derivative and intersects with
the sign components.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .analytic import (AnalyticFunction, Disc, _horner, _poly_deriv, evaluate_real,
                       evaluation_error_bound, factor_out_zeros, frequency, nth_derivative,
                       roots_in_disc, zero_count)
from .errors import (BoundaryZero, DegenerateSegment, DepthExceeded, NotInClass,
                     RadiusTooSmall, VanishingFactor, ZeroFunction)

THETA = 16.0
MARGIN = 0.05
DEPTH_MAX = 24
DEGREE_CAP = 64
WIDTH_MIN_REL = 1e-10
SEARCH_POINTS = 256
VERIFY_POINTS = 1024
OSC_SAMPLES = 64
VANISH_TOL = 1e-9
RESOLVE_RTOL = 1e-3
GRADED_LEVELS = 40
ROOT_MERGE_RTOL = 1e-6
_GOLDEN = 0.3819660112501051


@dataclass(frozen=True)
class DecompositionPiece:
    lo: float
    hi: float
    center: float
    exponent: int
    lower_const: float
    upper_const: float
    sign: int | None = None

    def __post_init__(self):
        for name in ("lo", "hi", "center", "lower_const", "upper_const"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "exponent", int(self.exponent))
        if self.sign is not None:
            object.__setattr__(self, "sign", int(self.sign))
        if not self.lo < self.hi:
            raise ValueError(f"empty piece [{self.lo}, {self.hi}]")
        if self.lo < self.center < self.hi:
            raise ValueError(f"center {self.center} inside ({self.lo}, {self.hi})")
        if not 0 < self.lower_const <= self.upper_const:
            raise ValueError("constants must satisfy 0 < lower <= upper")

    @property
    def ratio(self) -> float:
        return self.upper_const / self.lower_const


@dataclass
class Decomposition:
    pieces: list[DecompositionPiece]
    source: str = ""
    stats: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lo", "hi", "center", "exponent", "lower_const", "upper_const", "sign"])
        for p in self.pieces:
            writer.writerow([repr(p.lo), repr(p.hi), repr(p.center), p.exponent,
                             repr(p.lower_const), repr(p.upper_const),
                             "" if p.sign is None else p.sign])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, source: str = "") -> "Decomposition":
        pieces = []
        for row in csv.DictReader(io.StringIO(text)):
            pieces.append(DecompositionPiece(
                float(row["lo"]), float(row["hi"]), float(row["center"]), int(row["exponent"]),
                float(row["lower_const"]), float(row["upper_const"]),
                int(row["sign"]) if row["sign"] else None))
        return cls(pieces, source)


def _graded(lo: float, hi: float, base: float, levels: int, scale: float = 1.0) -> np.ndarray:
    """Points ``scale * base^-j`` of the width away from either endpoint."""
    offs = (hi - lo) * scale * base ** -np.arange(1.0, levels + 1)
    return np.concatenate([lo + offs, hi - offs])


def _drop_center(t: np.ndarray, lo: float, hi: float, center: float) -> np.ndarray:
    return np.unique(t[np.abs(t - center) > 1e-12 * (hi - lo)])


def search_grid(lo: float, hi: float, center: float, n: int = SEARCH_POINTS) -> np.ndarray:
    """Uniform points plus a base-2 grading towards both endpoints."""
    t = np.concatenate([np.linspace(lo, hi, n), _graded(lo, hi, 2.0, GRADED_LEVELS)])
    return _drop_center(t, lo, hi, center)


def verify_grid(lo: float, hi: float, center: float, n: int = VERIFY_POINTS) -> np.ndarray:
    """Offset lattice with a base-3 grading; shares no interior point with :func:`search_grid`."""
    t = lo + (np.arange(n) + _GOLDEN) / n * (hi - lo)
    t = np.concatenate([t, _graded(lo, hi, 3.0, GRADED_LEVELS * 5 // 8, _GOLDEN), [lo, hi]])
    return _drop_center(t, lo, hi, center)


def _ratio_range(values: np.ndarray, t: np.ndarray, center: float, k: int) -> tuple[float, float]:
    g = np.abs(values) / np.abs(t - center) ** k
    return float(g.min()), float(g.max())


def _resolved(f: AnalyticFunction, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Points where the computed value of ``f`` is accurate to ``RESOLVE_RTOL``.

    Close to a multiple zero ``|f|`` can fall below the rounding floor of the
    series; such samples carry no information about the ratio.
    """
    values = evaluate_real(f, t)
    keep = evaluation_error_bound(f, t) <= RESOLVE_RTOL * np.abs(values)
    return t[keep], values[keep]


def verify_piece(f: AnalyticFunction, piece: DecompositionPiece, n: int = VERIFY_POINTS) -> dict:
    """Two-sided comparability of ``|f|`` on an independent grid."""
    grid = verify_grid(piece.lo, piece.hi, piece.center, n)
    t, values = _resolved(f, grid)
    if t.size == 0:
        return {"min_ratio": None, "max_ratio": None, "points": 0,
                "unresolved": int(grid.size), "pass": False}
    m, M = _ratio_range(values, t, piece.center, piece.exponent)
    ok = piece.lower_const <= m and M <= piece.upper_const
    return {"min_ratio": m, "max_ratio": M, "points": int(t.size),
            "unresolved": int(grid.size - t.size), "pass": bool(ok)}


# --------------------------------------------------------------------------
# oscillation
# --------------------------------------------------------------------------

def _oscillation(values: np.ndarray) -> float:
    if np.any(values == 0) or (values.min() < 0 < values.max()):
        return math.inf
    a = np.abs(values)
    return float(a.max() / a.min() - 1.0)


def _oscillation_pieces(psi, lo, hi, eps, depth_max, samples):
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    half = (hi - lo) / 2
    work = Disc((lo + hi) / 2, 4 * half)
    try:
        if zero_count(psi, work) != 0:
            raise VanishingFactor(f"factor vanishes in D({work.center.real}, {work.radius})")
    except BoundaryZero as exc:
        raise VanishingFactor(str(exc)) from exc
    out, depth_used = [], 0
    stack = [(lo, hi, 0)]
    while stack:
        a, b, depth = stack.pop()
        t = np.linspace(a, b, samples)
        if _oscillation(evaluate_real(psi, t)) < 0.5 * eps:
            out.append((a, b))
            depth_used = max(depth_used, depth)
            continue
        if depth >= depth_max:
            raise DepthExceeded(f"oscillation still above {eps} at depth {depth_max}")
        m = 0.5 * (a + b)
        stack += [(m, b, depth + 1), (a, m, depth + 1)]
    return sorted(out), depth_used


def oscillation_decompose(psi: AnalyticFunction, lo: float, hi: float, eps: float,
                          depth_max: int = DEPTH_MAX, samples: int = OSC_SAMPLES) -> list[tuple[float, float]]:
    """Bisect ``[lo, hi]`` until ``|psi(x)/psi(y) - 1| < eps / 2`` on sampled pairs."""
    return _oscillation_pieces(psi, lo, hi, eps, depth_max, samples)[0]


# --------------------------------------------------------------------------
# polynomial comparability
# --------------------------------------------------------------------------

def _expand_roots(roots) -> list[complex]:
    flat = []
    for r in roots:
        if isinstance(r, tuple):
            flat += [complex(r[0])] * int(r[1])
        else:
            flat.append(complex(r))
    # complete conjugates that were left outside a non-symmetric disc
    extra = []
    for z in flat:
        if z.imag != 0 and not any(abs(y - z.conjugate()) <= 1e-12 * max(1, abs(z)) for y in flat):
            extra.append(z.conjugate())
    return flat + extra


@dataclass
class _Poly:
    lead: float
    roots: np.ndarray

    def abs(self, t: np.ndarray) -> np.ndarray:
        out = np.full(t.shape, abs(self.lead))
        for z in self.roots:
            out = out * np.abs(t - z)
        return out


def _make_poly(p, roots, lead) -> _Poly:
    if roots is not None:
        rs = np.array(_expand_roots(roots), dtype=complex)
        return _Poly(float(lead), rs)
    if isinstance(p, AnalyticFunction):
        coeffs, origin = np.array(p.coeffs, dtype=float), p.center
    else:
        coeffs, origin = np.asarray(p, dtype=float), 0.0
    nz = np.nonzero(coeffs)[0]
    if nz.size == 0:
        raise ZeroFunction("polynomial is identically zero")
    coeffs = coeffs[:nz[-1] + 1]
    if coeffs.size == 1:
        return _Poly(float(coeffs[0]), np.zeros(0, dtype=complex))
    rs = _merge_clusters(np.polynomial.polynomial.polyroots(coeffs)) + origin
    return _Poly(float(coeffs[-1]), rs)


def _merge_clusters(roots: np.ndarray) -> np.ndarray:
    """Replace numerically split multiple roots by their cluster mean."""
    roots = np.asarray(roots, dtype=complex)
    out = np.empty_like(roots)
    used = np.zeros(roots.size, dtype=bool)
    for i, z in enumerate(roots):
        if used[i]:
            continue
        near = (~used) & (np.abs(roots - z) <= ROOT_MERGE_RTOL * max(1.0, abs(z)))
        mean = roots[near].mean()
        if abs(mean.imag) <= ROOT_MERGE_RTOL * max(1.0, abs(mean)):
            mean = complex(mean.real, 0.0)
        out[near] = mean
        used |= near
    return out


def _distinct(xs: np.ndarray) -> np.ndarray:
    """Sorted values with near-duplicates (a few ulps apart) collapsed."""
    out: list[float] = []
    for x in np.sort(xs):
        if not out or x - out[-1] > 8 * np.spacing(max(abs(x), 1e-300)):
            out.append(float(x))
    return np.array(out)


def _edge_fuzz(a: float, b: float) -> float:
    return max(1e-12 * (b - a), 8 * np.spacing(max(abs(a), abs(b))))


def polynomial_decompose(p, lo: float, hi: float, theta: float = THETA, margin: float = MARGIN,
                         depth_max: int = DEPTH_MAX, degree_cap: int = DEGREE_CAP,
                         roots=None, lead: float = 1.0) -> list[DecompositionPiece]:
    """Pieces on which ``|p(t)|`` is comparable to ``|t - a|^k``.

    ``p`` is an exact :class:`AnalyticFunction` or ascending coefficients in
    ``t``.  Alternatively pass ``roots`` (values or ``(value, multiplicity)``
    pairs) and ``lead``.  Centers are real parts of roots; a segment first
    tries each center with its natural exponent (the multiplicity of roots
    lying within half the center's distance to the segment), nearest center
    first, and only then any ``(a, k)`` with the smallest ``k``.  Segments
    failing every pair are bisected.
    """
    poly = _make_poly(p, roots, lead)
    deg = poly.roots.size
    if deg > degree_cap:
        raise ValueError(f"degree {deg} exceeds the cap {degree_cap}")
    width = hi - lo
    width_min = WIDTH_MIN_REL * width
    limit = theta * (1 - margin) / (1 + margin)
    reals = _distinct(poly.roots.real) if deg else np.zeros(0)

    fz = _edge_fuzz(lo, hi)
    cuts = [x for x in reals if lo + fz < x < hi - fz]
    edges = [lo] + sorted(cuts) + [hi]
    stack = [(a, b, 0) for a, b in zip(edges[:-1], edges[1:])][::-1]
    pieces = []
    while stack:
        a, b, depth = stack.pop()
        found = _fit_segment(poly, reals, a, b, deg, limit, margin)
        if found is not None:
            pieces.append(found)
            continue
        if (b - a) / 2 < width_min:
            raise DegenerateSegment(f"segment [{a}, {b}] shrank below {width_min:g}")
        if depth >= depth_max:
            raise DepthExceeded(f"no comparable monomial on [{a}, {b}] at depth {depth_max}")
        m = 0.5 * (a + b)
        stack += [(m, b, depth + 1), (a, m, depth + 1)]
    return sorted(pieces, key=lambda q: q.lo)


def _fit_segment(poly: _Poly, reals, a, b, deg, limit, margin):
    w = b - a
    fuzz = _edge_fuzz(a, b)
    # roots within rounding of an edge are taken to sit on it
    outside = sorted({a if abs(x - a) <= fuzz else b if abs(x - b) <= fuzz else float(x)
                      for x in reals if not (a + fuzz < x < b - fuzz)})
    if not outside:
        outside = [a]

    def dist(x):
        return max(a - x, x - b, 0.0)

    # resolve the scale at which nearby roots stop looking like one root
    near = []
    for e in (a, b):
        delta = np.abs(poly.roots - e)
        for dl in delta[(delta > 0) & (delta < w)]:
            near.append(e + np.sign(a + b - 2 * e) * dl * 2.0 ** np.arange(-6, 7))
    extra = np.concatenate(near) if near else np.zeros(0)
    extra = extra[(extra > a) & (extra < b)]

    def attempt(x, k):
        t = _drop_center(np.concatenate([search_grid(a, b, x), extra]), a, b, x)
        m, M = _ratio_range(poly.abs(t), t, x, k)
        if m > 0 and np.isfinite(M) and M / m <= limit:
            return M / m, m, M
        return None

    natural = []
    tol = 1e-9 * max(w, 1.0)
    for x in outside:
        r = dist(x)
        k = int(np.sum(np.abs(poly.roots - x) <= max(r / 2, tol)))
        res = attempt(x, k)
        if res is not None:
            natural.append((r, res[0], x, k, res[1], res[2]))
    if natural:
        _, _, x, k, m, M = min(natural)
    else:
        fallback = None
        for k in range(deg + 1):
            for x in sorted(outside, key=lambda y: (dist(y), y)):
                res = attempt(x, k)
                if res is not None:
                    fallback = (x, k, res[1], res[2])
                    break
            if fallback:
                break
        if fallback is None:
            return None
        x, k, m, M = fallback
    return DecompositionPiece(a, b, float(x), int(k), m * (1 - margin), M * (1 + margin))


# --------------------------------------------------------------------------
# composition
# --------------------------------------------------------------------------

def _tighten(f: AnalyticFunction, piece: DecompositionPiece, margin: float) -> DecompositionPiece:
    t, values = _resolved(f, search_grid(piece.lo, piece.hi, piece.center))
    if t.size == 0:
        return None
    m, M = _ratio_range(values, t, piece.center, piece.exponent)
    if not m > 0:
        return None
    return replace(piece, lower_const=m * (1 - margin), upper_const=M * (1 + margin))


def _comparable_pieces(f, poly_roots, lead, a, b, theta, margin, depth_max, depth=0):
    pieces = polynomial_decompose(None, a, b, theta, margin, depth_max, roots=poly_roots, lead=lead)
    out = []
    for piece in pieces:
        # same scaled polynomial envelope: 1/2 <= |psi_j| <= 3/2
        envelope = replace(piece, lower_const=piece.lower_const / 2,
                           upper_const=piece.upper_const * 1.5)
        tight = _tighten(f, envelope, margin)
        if tight is not None and tight.ratio <= theta:
            out.append(tight)
            continue
        if depth >= depth_max:
            raise DepthExceeded(f"re-verified ratio exceeds {theta} on [{piece.lo}, {piece.hi}]")
        mid = 0.5 * (piece.lo + piece.hi)
        for lo_, hi_ in ((piece.lo, mid), (mid, piece.hi)):
            out += _comparable_pieces(f, poly_roots, lead, lo_, hi_, theta, margin, depth_max, depth + 1)
    return out


def merge_pieces(f: AnalyticFunction, pieces: list[DecompositionPiece], theta: float = THETA,
                 margin: float = MARGIN) -> list[DecompositionPiece]:
    """Greedily join neighbours sharing an exponent whose union stays comparable."""
    out: list[DecompositionPiece] = []
    for piece in sorted(pieces, key=lambda q: q.lo):
        if out and out[-1].exponent == piece.exponent and out[-1].hi == piece.lo:
            prev = out[-1]
            lo, hi = prev.lo, piece.hi
            centers = [prev.center, piece.center] if prev.exponent else [lo]
            for c in centers:
                if lo < c < hi:
                    continue
                joined = _tighten(f, DecompositionPiece(lo, hi, c, prev.exponent, 1.0, 1.0), margin)
                if joined is not None and joined.ratio <= theta:
                    out[-1] = joined
                    break
            else:
                out.append(piece)
            continue
        out.append(piece)
    return out


def monomial_decompose(phi: AnalyticFunction, lo: float, hi: float, theta: float = THETA,
                       margin: float = MARGIN, depth_max: int = DEPTH_MAX,
                       stats: dict | None = None) -> list[DecompositionPiece]:
    """Pieces on which ``|phi(t)| ~ |t - a_j|^k_j`` (sign left unset)."""
    a, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    if not Disc(a, 8 * r).inside(phi.disc):
        raise RadiusTooSmall(
            f"need D({a}, {8 * r}) inside the validity disc D({phi.center}, {phi.radius})")
    fac = factor_out_zeros(phi, Disc(a, 4 * r))
    intervals, depth = _oscillation_pieces(fac.residual, lo, hi, 0.5, depth_max, OSC_SAMPLES)
    pieces = []
    for l_i, h_i in intervals:
        x_j = 0.5 * (l_i + h_i)
        psi_x = float(evaluate_real(fac.residual, x_j))
        pieces += _comparable_pieces(phi, fac.zeros, psi_x, l_i, h_i, theta, margin, depth_max)
    if stats is not None:
        stats["oscillation_pieces"] = stats.get("oscillation_pieces", 0) + len(intervals)
        stats["oscillation_depth"] = max(stats.get("oscillation_depth", 0), depth)
        stats["zeros"] = [(z.real, z.imag, m) for z, m in fac.zeros]
        stats["unmerged_pieces"] = stats.get("unmerged_pieces", 0) + len(pieces)
    return merge_pieces(phi, pieces, theta, margin)


def sign_components(f: AnalyticFunction, lo: float, hi: float) -> list[tuple[float, float, int]]:
    """Maximal subintervals between real zeros with the sign of ``f`` on each."""
    a, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    roots = None
    last_error = None
    for factor in (1.05, 1.1, 1.2, 1.3, 1.45):
        disc = Disc(a, factor * r)
        try:
            roots = roots_in_disc(f, disc)
            break
        except BoundaryZero as exc:
            last_error = exc
    if roots is None:
        raise last_error
    real_tol = 1e-10 * (f.radius if np.isfinite(f.radius) else 1.0)
    cuts = sorted({z.real for z, _ in roots
                   if abs(z.imag) < real_tol and lo + 1e-12 * r < z.real < hi - 1e-12 * r})
    edges = [lo] + cuts + [hi]
    out = []
    for l_, h_ in zip(edges[:-1], edges[1:]):
        v = float(evaluate_real(f, 0.5 * (l_ + h_)))
        if v == 0:
            raise ZeroFunction(f"function vanishes at the midpoint of [{l_}, {h_}]")
        out.append((l_, h_, 1 if v > 0 else -1))
    return out


def _derivative_values_at(phi: AnalyticFunction, x: float, upto: int) -> list[float]:
    c = np.array(phi.coeffs, dtype=float)
    vals = []
    for _ in range(upto):
        vals.append(float(np.real(_horner(c, x - phi.center))))
        c = _poly_deriv(c)
    return vals


def reduce_to_class(phi: AnalyticFunction, d: int, a: float) -> AnalyticFunction:
    """Subtract the degree ``d-1`` Taylor polynomial of ``phi`` at ``a``.

    Only ``phi^(d)`` enters torsion and Jacobians, so this shear does not
    change any geometric quantity.
    """
    vals = _derivative_values_at(phi, a, d)
    taylor = np.zeros(d)
    for j, v in enumerate(vals):
        # (t - a)^j / j! expanded about phi.center
        s = phi.center - a
        for i in range(j + 1):
            taylor[i] += v / math.factorial(j) * math.comb(j, i) * s ** (j - i)
    coeffs = np.array(phi.coeffs, dtype=float)
    if coeffs.size < d:
        coeffs = np.concatenate([coeffs, np.zeros(d - coeffs.size)])
    coeffs[:d] -= taylor
    if phi.exact:
        return AnalyticFunction(phi.center, phi.radius, coeffs, exact=True)
    return AnalyticFunction(phi.center, phi.radius, coeffs, phi.tail_bound)


def full_decompose(phi: AnalyticFunction, d: int, lo: float, hi: float, theta: float = THETA,
                   margin: float = MARGIN, depth_max: int = DEPTH_MAX, source: str = "",
                   normalize: bool = False) -> Decomposition:
    """Pieces of ``[lo, hi]`` on which ``phi^(d)`` is single-signed and comparable
    to a monomial centred outside the piece.

    ``phi`` must extend to ``D(a, 2^(d+3) r)`` with ``a``, ``r`` the midpoint and
    half-length, and ``phi, ..., phi^(d-1)`` must vanish at ``a`` (set
    ``normalize`` to subtract the Taylor polynomial first).
    """
    a, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    need = 2 ** (d + 3) * r
    if not Disc(a, need).inside(phi.disc):
        raise RadiusTooSmall(
            f"radius {phi.radius} too small: D({a}, {need}) must fit, "
            f"i.e. radius >= {need + abs(a - phi.center)}")
    if normalize:
        phi = reduce_to_class(phi, d, a)
    vals = _derivative_values_at(phi, a, d)
    bad = [j for j, v in enumerate(vals) if abs(v) > VANISH_TOL]
    if bad:
        raise NotInClass(f"derivatives of order {bad} do not vanish at the midpoint {a}")

    fd = nth_derivative(phi, d)
    working = min(fd.radius, 8 * r + abs(a - fd.center))
    n_eff = frequency(fd, working)
    stats: dict = {}
    raw = monomial_decompose(fd, lo, hi, theta, margin, depth_max, stats)
    comps = sign_components(fd, lo, hi)
    # a sign change already sitting on a piece edge (up to rounding) needs no cut
    snap = 1e-9 * (hi - lo)
    edges_raw = [p.lo for p in raw] + [raw[-1].hi]
    cuts = [c[0] for c in comps[1:] if min(abs(c[0] - e) for e in edges_raw) > snap]

    pieces = []
    for piece in raw:
        inner = [x for x in cuts if piece.lo < x < piece.hi]
        edges = [piece.lo] + inner + [piece.hi]
        for l_, h_ in zip(edges[:-1], edges[1:]):
            sub = replace(piece, lo=l_, hi=h_)
            if inner:
                sub = _tighten(fd, sub, margin)
                if sub is None:
                    raise DegenerateSegment(f"phi^({d}) vanishes on [{l_}, {h_}]")
            mid = 0.5 * (l_ + h_)
            sign = next(s for cl, ch, s in comps if cl <= mid <= ch)
            pieces.append(replace(sub, sign=sign))
    pieces.sort(key=lambda q: q.lo)
    stats.update({
        "pieces": len(pieces),
        "max_exponent": max(p.exponent for p in pieces),
        "frequency_budget": n_eff,
        "working_radius": working,
        "sign_components": len(comps),
        "required_radius_decomposition": need,
        "required_radius_restriction": 2 ** (2 * d + 3) * r,
        "max_ratio": max(p.ratio for p in pieces),
        "lo": lo,
        "hi": hi,
    })
    return Decomposition(pieces, source, stats)


def decomposition_certificate(decomp: Decomposition, fd: AnalyticFunction,
                              n: int = VERIFY_POINTS) -> dict:
    """Re-verification of every piece on an independent grid, JSON-ready."""
    rows = []
    for i, p in enumerate(decomp.pieces):
        rows.append({"piece": i, **asdict(p), **verify_piece(fd, p, n)})
    ps = decomp.pieces
    covered = all(x.hi == y.lo for x, y in zip(ps[:-1], ps[1:]))
    return {
        "source": decomp.source,
        "stats": decomp.stats,
        "pieces": rows,
        "all_pass": all(r["pass"] for r in rows) and covered,
    }
