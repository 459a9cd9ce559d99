"""Truncated power series on discs.

An :class:`AnalyticFunction` stores Taylor coefficients ``c_0 .. c_T`` about a
real center together with a certified bound on the discarded tail over the
half-radius disc.  Everything downstream (frequency, zero counting, root
location, factorisation) works on this representation.

Tail model
----------
Write ``a_n = |c_n| R^n``.  A non-exact series is accepted only if some index
``n0 <= T - w`` (window ``w = min(4, T)``) admits a ratio ``rho < 1`` with
``a_n <= a_n0 * rho**(n - n0)`` for all ``n0 <= n <= T``.  Extrapolating that
geometric decay past ``T`` and evaluating on ``|z - center| <= R/2`` gives

    tail <= a_n0 * rho**(T + 1 - n0) * 2**-(T + 1) / (1 - rho / 2).

The admissible ``n0`` giving the smallest bound is used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (BoundaryZero, FactorMismatch, NoConvergence, NoDecay, OutOfDisc,
                     RadiusExceeded, RootPolishFailure, TailTooLarge, ZeroFunction)

DECAY_WINDOW = 4
TAIL_TOL = 1e-8
BOUNDARY_TOL = 1e-9
MAX_CONTOUR_NODES = 2 ** 15
INTEGER_TOL = 1e-3
NEWTON_TOL = 1e-12
RESIDUAL_TOL = 1e-8
FACTOR_RTOL = 1e-8
REAL_AXIS_TOL = 1e-10
_CONTAIN_RTOL = 1e-12


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def inside(self, other: "Disc") -> bool:
        """True when this disc is contained in ``other``."""
        if math.isinf(other.radius):
            return True
        gap = abs(self.center - other.center) + self.radius
        return gap <= other.radius * (1 + _CONTAIN_RTOL)

    def boundary(self, n: int) -> np.ndarray:
        theta = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * theta)


def _log_abs(coeffs: np.ndarray, radius: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(coeffs))
    if radius != 1.0:
        la = la + np.arange(len(coeffs)) * math.log(radius)
    return la


def decay_tail(coeffs: np.ndarray, radius: float) -> float | None:
    """Tail bound on the half disc from the geometric decay model, or None."""
    T = len(coeffs) - 1
    if T < 2:
        return None
    la = _log_abs(coeffs, radius)
    w = min(DECAY_WINDOW, T)
    best = None
    for n0 in range(0, T - w + 1):
        if not np.isfinite(la[n0]):
            continue
        rest = la[n0 + 1:]
        steps = np.arange(1, T - n0 + 1)
        finite = np.isfinite(rest)
        if finite.any():
            log_rho = float(np.max((rest[finite] - la[n0]) / steps[finite]))
        else:
            log_rho = -math.inf
        if not log_rho < 0:
            continue
        if log_rho == -math.inf:
            bound = 0.0
        else:
            rho = math.exp(log_rho)
            log_bound = (la[n0] + (T + 1 - n0) * log_rho - (T + 1) * math.log(2.0)
                         - math.log1p(-rho / 2))
            bound = math.exp(log_bound)
        if best is None or bound < best:
            best = bound
    return best


@dataclass(frozen=True, eq=False)
class AnalyticFunction:
    """Real Taylor series ``sum c_n (z - center)^n`` valid on ``D(center, radius)``.

    ``exact`` marks a genuine polynomial: its tail is zero and any radius
    (including ``inf``) is allowed.  Otherwise the coefficients must pass the
    decay model and ``tail_bound`` defaults to the model's bound.
    """

    center: float
    radius: float
    coeffs: np.ndarray
    tail_bound: float | None = None
    exact: bool = False
    _scale: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("coeffs must be nonempty")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", float(self.center))
        radius = float(self.radius)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        if math.isinf(radius) and not self.exact:
            raise ValueError("infinite radius is reserved for exact polynomials")
        object.__setattr__(self, "radius", radius)
        if self.exact:
            tail = 0.0 if self.tail_bound is None else float(self.tail_bound)
        else:
            model = decay_tail(c, radius)
            if model is None:
                raise NoDecay(
                    f"coefficients (T={c.size - 1}) show no geometric decay at radius {radius}")
            if self.tail_bound is None:
                tail = model
            else:
                tail = float(self.tail_bound)
                if tail < model * (1 - 1e-9):
                    raise NoDecay(f"tail_bound {tail:g} is below the decay-model bound {model:g}")
        object.__setattr__(self, "tail_bound", tail)
        half = radius / 2 if np.isfinite(radius) else 1.0
        la = _log_abs(c, half)
        top = float(np.max(la))
        scale = math.exp(top) * float(np.sum(np.exp(la - top))) if np.isfinite(top) else 0.0
        object.__setattr__(self, "_scale", scale)

    # constructors -------------------------------------------------------
    @classmethod
    def polynomial(cls, coeffs: Sequence[float], center: float = 0.0,
                   radius: float = math.inf) -> "AnalyticFunction":
        return cls(center, radius, np.asarray(coeffs, dtype=float), exact=True)

    @classmethod
    def from_roots(cls, roots: Iterable[complex], lead: float = 1.0, center: float = 0.0,
                   radius: float = math.inf) -> "AnalyticFunction":
        """Exact real polynomial ``lead * prod (z - r)`` written about ``center``."""
        poly = np.array([lead], dtype=complex)
        for r in roots:
            poly = np.convolve(poly, [-(complex(r) - center), 1.0])
        if np.max(np.abs(poly.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(poly))):
            raise ValueError("roots must be closed under conjugation")
        return cls(center, radius, poly.real, exact=True)

    # basic properties ---------------------------------------------------
    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def sup_half(self) -> float:
        """Upper bound for ``|f|`` on the half-radius disc (coefficient sum)."""
        return self._scale

    @property
    def disc(self) -> Disc:
        return Disc(self.center, self.radius)

    def eval_disc(self) -> Disc:
        return Disc(self.center, self.radius / 2 if np.isfinite(self.radius) else math.inf)

    def __call__(self, z):
        return evaluate(self, z)

    # arithmetic ---------------------------------------------------------
    def scale(self, m: float) -> "AnalyticFunction":
        return AnalyticFunction(self.center, self.radius, self.coeffs * m,
                                None if not self.exact else 0.0, self.exact)

    def __mul__(self, other: "AnalyticFunction") -> "AnalyticFunction":
        return multiply(self, other)

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "radius": "inf" if math.isinf(self.radius) else self.radius,
            "coeffs": [float(x) for x in self.coeffs],
            "tail_bound": self.tail_bound,
            "exact": self.exact,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalyticFunction":
        radius = data["radius"]
        radius = math.inf if radius == "inf" else float(radius)
        return cls(float(data["center"]), radius, np.asarray(data["coeffs"], dtype=float),
                   data.get("tail_bound"), bool(data.get("exact", False)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "AnalyticFunction":
        return cls.from_dict(json.loads(text))


def _horner(coeffs: np.ndarray, w):
    acc = np.zeros_like(w, dtype=complex) if isinstance(w, np.ndarray) else 0j
    for c in coeffs[::-1]:
        acc = acc * w + c
    return acc


def _poly_deriv(coeffs: np.ndarray, k: int = 1) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    for _ in range(k):
        if c.size == 1:
            return np.zeros(1)
        c = c[1:] * np.arange(1, c.size)
    return c


def evaluate(f: AnalyticFunction, z):
    """Value of the truncated series at ``z`` (scalar or array).

    The truncation error is at most ``f.tail_bound``; points outside the
    half-radius disc are rejected.
    """
    arr = np.asarray(z, dtype=complex)
    w = arr - f.center
    if np.isfinite(f.radius):
        limit = f.radius / 2 * (1 + _CONTAIN_RTOL)
        if np.any(np.abs(w) > limit):
            raise OutOfDisc(f"point outside D({f.center}, {f.radius / 2})")
    out = _horner(f.coeffs, w)
    return complex(out) if arr.ndim == 0 else out


def evaluate_real(f: AnalyticFunction, t) -> np.ndarray:
    return np.real(evaluate(f, np.asarray(t, dtype=float)))


def evaluation_error_bound(f: AnalyticFunction, z) -> np.ndarray:
    """Bound on ``|evaluate(f, z) - f(z)|``: Horner rounding plus the tail."""
    w = np.abs(np.asarray(z, dtype=complex) - f.center)
    n = f.coeffs.size
    u = np.finfo(float).eps / 2
    gamma = 2 * n * u / (1 - 2 * n * u)
    return gamma * np.real(_horner(np.abs(f.coeffs), w)) + f.tail_bound


def multiply(f: AnalyticFunction, g: AnalyticFunction) -> AnalyticFunction:
    """Cauchy product about the common center.

    Only coefficients fully determined by the stored ones are kept, unless
    both factors are exact.
    """
    if f.center != g.center:
        raise ValueError("series must share a center")
    full = np.convolve(f.coeffs, g.coeffs)
    radius = min(f.radius, g.radius)
    if f.exact and g.exact:
        return AnalyticFunction(f.center, radius, full, exact=True)
    if f.exact:
        n = g.order + 1
    elif g.exact:
        n = f.order + 1
    else:
        n = min(f.order, g.order) + 1
    return AnalyticFunction(f.center, radius, full[:n])


def derivative(f: AnalyticFunction, tail_tol: float = TAIL_TOL) -> AnalyticFunction:
    """Term-wise derivative, valid on the halved radius.

    The new tail bound is the larger of the decay-model bound and the Cauchy
    estimate of the derivative of the old tail.
    """
    c = _poly_deriv(f.coeffs)
    if f.exact:
        return AnalyticFunction(f.center, f.radius / 2, c, exact=True)
    radius = f.radius / 2
    model = decay_tail(c, radius)
    if model is None:
        raise NoDecay("derivative series has too few coefficients for the decay model")
    cauchy = f.tail_bound * 4.0 / f.radius
    out = AnalyticFunction(f.center, radius, c, max(model, cauchy))
    if out.tail_bound > tail_tol * max(out.sup_half, 1e-300):
        raise TailTooLarge(
            f"derivative tail bound {out.tail_bound:g} exceeds {tail_tol:g} x {out.sup_half:g}")
    return out


def nth_derivative(f: AnalyticFunction, k: int, tail_tol: float = TAIL_TOL) -> AnalyticFunction:
    for _ in range(k):
        f = derivative(f, tail_tol)
    return f


def antiderivative(f: AnalyticFunction) -> AnalyticFunction:
    """Antiderivative vanishing at the center, on the same radius."""
    c = np.concatenate([[0.0], f.coeffs / np.arange(1, f.order + 2)])
    if f.exact:
        return AnalyticFunction(f.center, f.radius, c, exact=True)
    model = decay_tail(c, f.radius)
    return AnalyticFunction(f.center, f.radius, c, max(model, f.tail_bound * f.radius / 2))


def recenter(f: AnalyticFunction, new_center: float) -> AnalyticFunction:
    """Taylor shift of an exact polynomial."""
    if not f.exact:
        raise ValueError("recentering is only supported for exact polynomials")
    s = new_center - f.center
    c = np.array(f.coeffs, dtype=float)
    n = c.size
    # repeated synthetic division by (w - s) gives the shifted coefficients
    out = np.empty(n)
    work = c.copy()
    for k in range(n):
        for j in range(n - 2, k - 1, -1):
            work[j] += s * work[j + 1]
        out[k] = work[k]
    radius = f.radius - abs(s) if np.isfinite(f.radius) else math.inf
    return AnalyticFunction(new_center, radius, out, exact=True)


def frequency(f: AnalyticFunction, R: float) -> float:
    """``2 * sum n |c_n|^2 R^2n / sum |c_k|^2 R^2k`` over the stored coefficients."""
    if R > f.radius * (1 + _CONTAIN_RTOL):
        raise RadiusExceeded(f"R={R} exceeds the validity radius {f.radius}")
    if not R > 0:
        raise ValueError("R must be positive")
    la = _log_abs(f.coeffs, R)
    if not np.isfinite(la).any():
        raise ZeroFunction("frequency of the zero function is undefined")
    w = np.exp(2 * (la - np.max(la)))
    num = 0.0
    den = 0.0
    for n in range(w.size - 1, -1, -1):
        num += n * w[n]
        den += w[n]
    return float(2.0 * num / den)


def frequency_monotone_scan(f: AnalyticFunction, r_grid: Sequence[float]) -> list[tuple[float, float]]:
    grid = [float(r) for r in r_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("radius grid must be strictly increasing")
    return [(r, frequency(f, r)) for r in grid]


def _check_disc(f: AnalyticFunction, d: Disc) -> None:
    if not d.inside(f.eval_disc()):
        raise OutOfDisc(f"disc D({d.center}, {d.radius}) not inside D({f.center}, {f.radius / 2})")


def zero_count(f: AnalyticFunction, d: Disc, boundary_tol: float = BOUNDARY_TOL,
               max_nodes: int = MAX_CONTOUR_NODES) -> int:
    """Number of zeros in ``d`` (with multiplicity) by the argument principle.

    Trapezoidal quadrature of ``f'/f`` on the boundary circle; nodes are
    doubled until two successive values sit within ``INTEGER_TOL`` of the same
    integer.  The boundary minimum must exceed both a relative threshold and
    the tail bound, which makes the count valid for the untruncated function.
    """
    _check_disc(f, d)
    dc = _poly_deriv(f.coeffs)
    n = 64
    previous = None
    while n <= max_nodes:
        z = d.boundary(n)
        w = z - f.center
        fz = _horner(f.coeffs, w)
        mags = np.abs(fz)
        lo = float(mags.min())
        noise = float(np.max(evaluation_error_bound(f, z)))
        if lo <= boundary_tol * float(mags.max()) or lo <= noise:
            raise BoundaryZero(f"|f| = {lo:g} on the boundary of D({d.center}, {d.radius})")
        dfz = _horner(dc, w)
        value = np.mean(dfz / fz * (z - d.center))
        k = int(round(value.real))
        close = abs(value - k) < INTEGER_TOL
        if close and previous == k:
            return k
        previous = k if close else None
        n *= 2
    raise NoConvergence(f"contour quadrature did not settle within {max_nodes} nodes")


def _newton(coeffs: np.ndarray, w0: complex, scale: float, max_iter: int = 100) -> complex:
    dcoeffs = _poly_deriv(coeffs)
    w = complex(w0)
    g = _horner(coeffs, w)
    noise = 64 * np.finfo(float).eps
    for _ in range(max_iter):
        gp = _horner(dcoeffs, w)
        if g == 0:
            return w
        if gp == 0:
            raise RootPolishFailure(f"vanishing derivative during polish at {w}")
        step = g / gp
        lam = 1.0
        for _ in range(40):
            cand = w - lam * step
            gc = _horner(coeffs, cand)
            if abs(gc) < abs(g) or lam < 1e-9:
                break
            lam *= 0.5
        size = abs(lam * step)
        w, g = cand, gc
        if size <= NEWTON_TOL * scale:
            return w
        floor = noise * float(np.sum(np.abs(coeffs) * np.abs(w) ** np.arange(coeffs.size)))
        if abs(g) <= floor and size <= 1e-8 * scale:
            return w
    raise RootPolishFailure(f"Newton polish stalled near {w}")


def _resolve_cluster(f: AnalyticFunction, cl: list[complex]) -> list[list[complex]]:
    """Split a cluster into simple roots when the argument principle separates them.

    Eigenvalues of a genuine multiple root scatter at the rounding level, where
    a small contour cannot be resolved; distinct nearby roots each own a disc.
    """
    if len(cl) == 1:
        return [cl]
    pts = np.asarray(cl)
    try:
        for i, z in enumerate(pts):
            gap = np.min(np.abs(np.delete(pts, i) - z))
            if gap == 0 or zero_count(f, Disc(complex(z), gap / 3)) != 1:
                return [cl]
    except (BoundaryZero, NoConvergence, OutOfDisc):
        return [cl]
    return [[z] for z in cl]


def roots_in_disc(f: AnalyticFunction, d: Disc) -> list[tuple[complex, int]]:
    """Zeros of ``f`` in ``d`` with multiplicities.

    Companion-matrix eigenvalues of the (rescaled, trimmed) truncated series
    seed the search; clusters give multiplicities and each cluster is polished
    by damped Newton on the matching derivative.  Conjugate pairs are made
    exactly symmetric.
    """
    count = zero_count(f, d)
    if count == 0:
        return []
    s = abs(d.center - f.center) + d.radius
    b = f.coeffs * s ** np.arange(f.coeffs.size)
    keep = np.nonzero(np.abs(b) > 1e-17 * np.max(np.abs(b)))[0]
    deg = max(int(keep[-1]), count)
    b = b[:deg + 1]
    if b[-1] == 0:
        raise RootPolishFailure("trimmed polynomial has a vanishing leading coefficient")
    candidates = np.polynomial.polynomial.polyroots(b) * s + f.center
    near = candidates[np.abs(candidates - d.center) < d.radius * 1.05 + 1e-9 * s]

    clusters: list[list[complex]] = []
    tol = 1e-5 * s
    for z in near:
        for cl in clusters:
            if min(abs(z - y) for y in cl) < tol:
                cl.append(z)
                break
        else:
            clusters.append([z])

    clusters = [part for cl in clusters for part in _resolve_cluster(f, cl)]
    polished: list[tuple[complex, int]] = []
    for cl in clusters:
        m = len(cl)
        start = complex(np.mean(cl)) - f.center
        g = _poly_deriv(f.coeffs, m - 1)
        w = _newton(g, start, s)
        z = w + f.center
        for idx, (y, k) in enumerate(polished):
            if abs(y - z) < 1e-8 * s:
                polished[idx] = (y, k + m)
                break
        else:
            polished.append((z, m))

    out = []
    real_tol = REAL_AXIS_TOL * (f.radius if np.isfinite(f.radius) else s)
    for z, m in polished:
        if abs(z.imag) <= real_tol:
            z = complex(z.real, 0.0)
        if abs(z - d.center) < d.radius:
            scale = float(np.sum(np.abs(f.coeffs) * abs(z - f.center) ** np.arange(f.coeffs.size)))
            # values below the rounding floor of f on the half disc count as zero
            floor = 64 * np.finfo(float).eps * f.sup_half
            if abs(evaluate(f, z)) > RESIDUAL_TOL * scale + floor:
                raise RootPolishFailure(f"residual too large at root {z}")
            out.append((z, m))

    # exact conjugate symmetry for pairs that both lie in the disc
    upper = [i for i, (z, _) in enumerate(out) if z.imag > 0]
    used = set()
    for i in upper:
        z, m = out[i]
        best, dist = None, math.inf
        for j, (y, k) in enumerate(out):
            if y.imag < 0 and j not in used and abs(y - z.conjugate()) < dist:
                best, dist = j, abs(y - z.conjugate())
        if best is not None and dist < 1e-6 * s:
            used.add(best)
            out[best] = (z.conjugate(), out[best][1])

    total = sum(m for _, m in out)
    if total != count:
        raise RootPolishFailure(f"located multiplicity {total} differs from zero count {count}")
    return sorted(out, key=lambda r: (r[0].real, r[0].imag))


@dataclass(frozen=True, eq=False)
class Factorization:
    poly: AnalyticFunction
    residual: AnalyticFunction
    zeros: list[tuple[complex, int]]


def _divide_linear(c: np.ndarray, r: float) -> np.ndarray:
    q = np.empty(c.size - 1)
    acc = 0.0
    for k in range(c.size - 1, 0, -1):
        acc = c[k] + r * acc
        q[k - 1] = acc
    return q


def _divide_quadratic(c: np.ndarray, b: float, e: float) -> np.ndarray:
    # divide by w^2 + b w + e, highest coefficient first
    n = c.size
    q = np.zeros(n - 2)
    for k in range(n - 1, 1, -1):
        hi1 = q[k - 1] if k - 1 < n - 2 else 0.0
        hi2 = q[k] if k < n - 2 else 0.0
        q[k - 2] = c[k] - b * hi1 - e * hi2
    return q


def factor_out_zeros(f: AnalyticFunction, d: Disc) -> Factorization:
    """Split ``f = poly * residual`` with ``poly`` monic, carrying all zeros in ``d``."""
    zeros = roots_in_disc(f, d)
    factors: list[tuple[str, float, float]] = []
    for z, m in zeros:
        w = z - f.center
        if z.imag == 0:
            factors += [("lin", w.real, 0.0)] * m
        elif z.imag > 0:
            factors += [("quad", -2 * w.real, abs(w) ** 2)] * m
        else:
            partner = any(abs(y - z.conjugate()) == 0 for y, _ in zeros)
            if not partner:
                factors += [("quad", -2 * w.real, abs(w) ** 2)] * m

    poly = np.array([1.0])
    resid = np.array(f.coeffs, dtype=float)
    for kind, u, v in factors:
        if kind == "lin":
            poly = np.convolve(poly, [-u, 1.0])
            if resid.size < 2:
                raise FactorMismatch("series too short to divide out a root")
            resid = _divide_linear(resid, u)
        else:
            poly = np.convolve(poly, [v, u, 1.0])
            if resid.size < 3:
                raise FactorMismatch("series too short to divide out a root pair")
            resid = _divide_quadratic(resid, u, v)

    p = AnalyticFunction(f.center, math.inf, poly, exact=True)
    if f.exact:
        r = AnalyticFunction(f.center, f.radius, resid, exact=True)
    else:
        model = decay_tail(resid, f.radius)
        if model is None:
            raise FactorMismatch("residual series lost its decay")
        r = AnalyticFunction(f.center, f.radius, resid, max(model, f.tail_bound))

    samples = np.concatenate([
        Disc(d.center, 0.95 * d.radius).boundary(48),
        d.center + d.radius * np.linspace(-0.9, 0.9, 16),
    ])
    fz = evaluate(f, samples)
    rebuilt = evaluate(p, samples) * evaluate(r, samples)
    scale = float(np.max(np.abs(fz)))
    err = float(np.max(np.abs(rebuilt - fz)))
    if err > FACTOR_RTOL * scale:
        raise FactorMismatch(f"reconstruction error {err:g} relative to {scale:g}")
    if zero_count(r, d) != 0:
        raise FactorMismatch("residual still vanishes inside the disc")
    return Factorization(p, r, zeros)


def doubling_ratio(f: AnalyticFunction, z: complex, r: float, nodes: int = 512) -> float:
    """``sup_{|w-z|=r} |f| / sup_{|w-z|=r/2} |f|`` by boundary sampling."""
    outer = Disc(z, r)
    _check_disc(f, outer)
    big = float(np.max(np.abs(evaluate(f, outer.boundary(nodes)))))
    small = float(np.max(np.abs(evaluate(f, Disc(z, r / 2).boundary(nodes)))))
    if small == 0:
        raise ZeroFunction("function vanishes on the inner circle")
    return big / small
