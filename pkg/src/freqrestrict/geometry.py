"""Torsion, affine density, Jacobians of the sum map and their certification.

For ``gamma(t) = (t, t^2, ..., t^(d-1), phi(t))`` the sum map
``Gamma(t_1..t_d) = sum gamma(t_i)`` has Jacobian

    J(t) = det[gamma'(t_i)] = V(t) * (d-1)! * phi'[t_1, ..., t_d]

with ``V`` the Vandermonde product and ``phi'[...]`` the divided difference
of ``phi'``.  Subtracting Newton rows eliminates the polynomial columns,
which leaves a triangular matrix.  The divided difference is computed by
repeated synthetic division of the Taylor coefficients, so it stays
accurate (and well defined) when coordinates coincide.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .analytic import AnalyticFunction, _horner, _poly_deriv
from .decomposition import DecompositionPiece
from .errors import (CalibrationInconsistent, CenterInside, CostGuard, DegeneratePiece,
                     OutOfDisc)
from .quadrature import _leggauss, adaptive_gauss, gauss_legendre

MAX_RECURSIVE_DIM = 4
MAX_RECURSIVE_EVALS = 2e7
CALIBRATION_SPREAD = 1e-8
SAFETY = 0.9


# --------------------------------------------------------------------------
# exact constants
# --------------------------------------------------------------------------

def _fraction_det(rows: list[list[Fraction]]) -> Fraction:
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


def _monomial_derivative(power: int, order: int, t: Fraction) -> Fraction:
    if order > power:
        return Fraction(0)
    return Fraction(math.perm(power, order)) * t ** (power - order)


def product_of_factorials(n: int) -> int:
    return math.prod(math.factorial(k) for k in range(1, n + 1))


def torsion_determinant(d: int, t: Fraction = Fraction(1)) -> Fraction:
    """``det(gamma', ..., gamma^(d))`` at ``t`` for ``phi = t^d``, exactly."""
    rows = [[_monomial_derivative(j, k, t) for j in range(1, d + 1)] for k in range(1, d + 1)]
    return _fraction_det(rows)


def torsion_constant(d: int) -> int:
    """``C_d`` with ``L_gamma = C_d phi^(d)``; equals ``prod_{j<d} j!``."""
    if not 2 <= d <= 8:
        raise ValueError("torsion_constant is provided for 2 <= d <= 8")
    value = torsion_determinant(d) / math.factorial(d)
    assert value.denominator == 1
    return int(value)


def minor_constant(i: int, d: int, probes: Sequence[Fraction] | None = None) -> int:
    """Value of the ``i x i`` leading minor of the moment coordinates.

    The determinant is evaluated exactly at several rational points and must
    be the same at all of them.
    """
    if not 1 <= i <= d - 1:
        raise ValueError("need 1 <= i <= d - 1")
    probes = probes or [Fraction(k, 7) - 3 for k in range(0, 48, 6)]
    vals = {_fraction_det([[_monomial_derivative(j, k, t) for j in range(1, i + 1)]
                           for k in range(1, i + 1)]) for t in probes}
    if len(vals) != 1:
        raise CalibrationInconsistent(f"minor {i} is not constant: {sorted(vals)}")
    (v,) = vals
    return int(v)


# --------------------------------------------------------------------------
# curves
# --------------------------------------------------------------------------

@dataclass
class SimpleCurve:
    """``gamma(t) = (t, t^2, ..., t^(d-1), phi(t))``.

    ``phi`` is either a series, or given by ``derivs``: callables for
    ``phi, phi', ..., phi^(d)``.  ``interval`` is the working interval
    (used only for the closed-form branch).
    """

    dim: int
    phi: AnalyticFunction | None = None
    derivs: Sequence[Callable[[np.ndarray], np.ndarray]] | None = None
    name: str = ""
    _coeffs: list = field(init=False, repr=False, default_factory=list)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if (self.phi is None) == (self.derivs is None):
            raise ValueError("give exactly one of phi or derivs")
        if self.derivs is not None and len(self.derivs) < self.dim + 1:
            raise ValueError("derivs must list phi, phi', ..., phi^(d)")
        if self.phi is not None:
            c = np.array(self.phi.coeffs, dtype=float)
            self._coeffs = [c]
            for _ in range(self.dim):
                c = _poly_deriv(c)
                self._coeffs.append(c)

    @classmethod
    def moment(cls, d: int) -> "SimpleCurve":
        coeffs = np.zeros(d + 1)
        coeffs[d] = 1.0
        return cls(d, AnalyticFunction.polynomial(coeffs), name=f"moment-{d}")

    @property
    def series(self) -> bool:
        return self.phi is not None

    def _shift(self, t) -> np.ndarray:
        w = np.asarray(t, dtype=float) - self.phi.center
        if np.isfinite(self.phi.radius) and np.any(np.abs(w) > self.phi.radius / 2 * (1 + 1e-12)):
            raise OutOfDisc(f"evaluation beyond {self.phi.radius / 2} from the center")
        return w

    def deriv(self, k: int, t) -> np.ndarray:
        """``phi^(k)(t)`` for ``0 <= k <= d``."""
        if self.series:
            return np.real(_horner(self._coeffs[k], self._shift(t)))
        return np.asarray(self.derivs[k](np.asarray(t, dtype=float)), dtype=float)

    def gamma(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        cols = [t ** j for j in range(1, self.dim)] + [self.deriv(0, t)]
        return np.stack(cols, axis=-1)

    def gamma_prime(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        cols = [j * t ** (j - 1) for j in range(1, self.dim)] + [self.deriv(1, t)]
        return np.stack(cols, axis=-1)

    def torsion(self, t) -> np.ndarray:
        return torsion_constant(self.dim) * self.deriv(self.dim, t)

    def dphi_divided_difference(self, ts: np.ndarray) -> np.ndarray:
        """``phi'[t_1..t_d]`` for a batch ``ts`` of shape ``(..., d)`` (series only)."""
        ts = np.asarray(ts, dtype=float)
        x = self._shift(ts)
        c = self._coeffs[1]
        shape = x.shape[:-1]
        x = x.reshape(-1, self.dim)
        work = np.broadcast_to(c, (x.shape[0], c.size)).copy()
        for j in range(self.dim - 1):
            xj = x[:, j:j + 1]
            n = work.shape[1]
            q = np.empty((x.shape[0], max(n - 1, 1)))
            if n == 1:
                q[:] = 0.0
            else:
                q[:, -1] = work[:, -1]
                for i in range(n - 2, 0, -1):
                    q[:, i - 1] = work[:, i] + xj[:, 0] * q[:, i]
            work = q
        last = x[:, -1]
        acc = np.zeros(x.shape[0])
        for i in range(work.shape[1] - 1, -1, -1):
            acc = acc * last + work[:, i]
        return acc.reshape(shape)


def vandermonde(ts: np.ndarray) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    out = np.ones(ts.shape[:-1])
    d = ts.shape[-1]
    for i in range(d):
        for k in range(i + 1, d):
            out = out * (ts[..., k] - ts[..., i])
    return out


def affine_density(curve: SimpleCurve, t) -> np.ndarray:
    """``|C_d phi^(d)(t)|^(2 / (d^2 + d))``."""
    d = curve.dim
    return np.abs(curve.torsion(t)) ** (2.0 / (d * d + d))


def jacobian_matrix_det(curve: SimpleCurve, ts) -> np.ndarray:
    """``det[gamma'(t_i)]`` by LU with partial pivoting."""
    ts = np.asarray(ts, dtype=float)
    return np.linalg.det(curve.gamma_prime(ts))


def jacobian_direct(curve: SimpleCurve, ts) -> np.ndarray:
    """Jacobian of the sum map at one tuple or a batch of tuples."""
    ts = np.asarray(ts, dtype=float)
    if ts.shape[-1] != curve.dim:
        raise ValueError(f"expected {curve.dim} coordinates")
    if not curve.series:
        return jacobian_matrix_det(curve, ts)
    dd = curve.dphi_divided_difference(ts)
    return vandermonde(ts) * math.factorial(curve.dim - 1) * dd


def geometric_ratio(curve: SimpleCurve, ts) -> np.ndarray:
    """``|J| / (prod |phi^(d)(t_j)|^(1/d) * |V|)``, extended to coincident points."""
    ts = np.asarray(ts, dtype=float)
    d = curve.dim
    if curve.series:
        num = math.factorial(d - 1) * np.abs(curve.dphi_divided_difference(ts))
    else:
        num = np.abs(jacobian_matrix_det(curve, ts)) / np.abs(vandermonde(ts))
    dens = np.prod(np.abs(curve.deriv(d, ts)) ** (1.0 / d), axis=-1)
    return num / dens


# --------------------------------------------------------------------------
# recursive integral formula
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RecursiveEvalConfig:
    quad_order: int = 24
    calibration: float = 1.0

    def __post_init__(self):
        if self.quad_order < 4:
            raise ValueError("quad_order must be at least 4")
        if not self.calibration > 0:
            raise ValueError("calibration must be positive")


def recursive_cost(d: int, quad_order: int) -> int:
    return quad_order ** (d * (d - 1) // 2)


def _lambda_raw(curve: SimpleCurve, ts: np.ndarray, j: int, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Uncalibrated ``Lambda_j`` on a batch ``ts`` of shape ``(B, j)``."""
    if j == 1:
        return curve.torsion(ts[:, 0])
    q = x.size
    m = j - 1
    lo, hi = ts[:, :-1], ts[:, 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    grids = np.meshgrid(*([np.arange(q)] * m), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=-1)          # (q^m, m)
    s = mid[:, None, :] + half[:, None, :] * x[idx][None, :, :]     # (B, q^m, m)
    weights = np.prod(w[idx], axis=-1)[None, :] * np.prod(half, axis=-1)[:, None]
    inner = _lambda_raw(curve, s.reshape(-1, m), m, x, w).reshape(s.shape[:2])
    return np.sum(weights * inner, axis=1)


def lambda_recursive(curve: SimpleCurve, ts, cfg: RecursiveEvalConfig = RecursiveEvalConfig()) -> np.ndarray:
    """Nested Gauss-Legendre evaluation of ``Lambda_d`` at increasing tuples."""
    d = curve.dim
    if d > MAX_RECURSIVE_DIM or recursive_cost(d, cfg.quad_order) > MAX_RECURSIVE_EVALS:
        raise CostGuard(f"recursion with d={d}, order {cfg.quad_order} needs "
                        f"{recursive_cost(d, cfg.quad_order):.3g} evaluations per tuple")
    ts = np.asarray(ts, dtype=float)
    single = ts.ndim == 1
    batch = ts.reshape(-1, d)
    if np.any(np.diff(batch, axis=1) < 0):
        raise ValueError("tuples must be nondecreasing")
    x, w = _leggauss(cfg.quad_order)
    # keep the working arrays near a few million entries
    per = recursive_cost(d, cfg.quad_order)
    chunk = max(1, int(4e6 // per))
    out = np.concatenate([_lambda_raw(curve, batch[i:i + chunk], d, x, w)
                          for i in range(0, batch.shape[0], chunk)])
    out = cfg.calibration * out
    return out[0] if single else out.reshape(ts.shape[:-1])


def calibrate_recursion(d: int, cfg: RecursiveEvalConfig = RecursiveEvalConfig(),
                        tuples: int = 16, seed: int = 0) -> RecursiveEvalConfig:
    """Fit the overall constant on the moment curve ``phi = t^d``."""
    curve = SimpleCurve.moment(d)
    rng = np.random.default_rng(seed)
    ts = np.sort(rng.uniform(-1.0, 1.0, size=(tuples, d)), axis=1)
    raw = lambda_recursive(curve, ts, replace(cfg, calibration=1.0))
    scales = jacobian_direct(curve, ts) / raw
    spread = (scales.max() - scales.min()) / abs(scales.mean())
    if not np.all(scales > 0) or spread > CALIBRATION_SPREAD:
        raise CalibrationInconsistent(f"scale spread {spread:.3g} across {tuples} tuples")
    return replace(cfg, calibration=float(scales.mean()))


# --------------------------------------------------------------------------
# integral lower bound
# --------------------------------------------------------------------------

def c_alpha(alpha: float) -> float:
    return min(1.0 / (alpha + 2.0), 2.0 ** (-alpha))


def integral_bound_check(t: float, tau: float, a: float, alpha: float) -> tuple[float, float, bool]:
    """``int_t^tau |s-a|^alpha ds`` against ``C_alpha |t-a|^(alpha/2) |tau-a|^(alpha/2) |tau-t|``."""
    if not t < tau:
        raise ValueError("need t < tau")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if t <= a <= tau:
        raise CenterInside(f"center {a} lies in [{t}, {tau}]")

    def integrand(s):
        return np.abs(s - a) ** alpha

    if float(alpha).is_integer() and alpha <= 63:
        x, w = gauss_legendre(64, t, tau)
        lhs = float(np.dot(w, integrand(x)))
    else:
        lhs = adaptive_gauss(integrand, t, tau)
    rhs = c_alpha(alpha) * abs(t - a) ** (alpha / 2) * abs(tau - a) ** (alpha / 2) * (tau - t)
    return lhs, rhs, bool(lhs >= rhs)


# --------------------------------------------------------------------------
# certification on a piece
# --------------------------------------------------------------------------

@dataclass
class GeometricCertificate:
    piece: DecompositionPiece
    K_est: float
    argmin: tuple[float, ...]
    samples: int
    refinement_rounds: int
    min_ratio: float
    domain: tuple[float, float]
    piece_id: int | None = None

    def to_dict(self) -> dict:
        return {
            "piece_id": self.piece_id,
            "piece": asdict(self.piece),
            "K_est": self.K_est,
            "min_ratio": self.min_ratio,
            "argmin": list(self.argmin),
            "samples": self.samples,
            "refinement_rounds": self.refinement_rounds,
            "domain": list(self.domain),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _certify_domain(curve: SimpleCurve, piece: DecompositionPiece) -> tuple[float, float]:
    lo, hi = piece.lo, piece.hi
    width = hi - lo
    if piece.exponent > 0:
        if piece.center == lo:
            lo += 1e-9 * width
        if piece.center == hi:
            hi -= 1e-9 * width
    probe = np.concatenate([np.linspace(lo, hi, 257), [lo, hi]])
    if np.any(curve.deriv(curve.dim, probe) == 0):
        raise DegeneratePiece(f"phi^({curve.dim}) vanishes on [{lo}, {hi}]")
    return lo, hi


def certify_piece(curve: SimpleCurve, piece: DecompositionPiece, budget: int = 4096,
                  seed: int = 0, strata: int = 16, max_rounds: int = 12,
                  piece_id: int | None = None) -> GeometricCertificate:
    """Sampled minimum of the geometric ratio over the ordered simplex of a piece.

    Stratified uniform samples seed a coordinate descent from the best few
    candidates.  ``K_est`` is 0.9 times the smallest value found.
    """
    d = curve.dim
    lo, hi = _certify_domain(curve, piece)
    per = max(1, budget // strata)
    batches = []
    for s in range(strata):
        rng = np.random.default_rng([seed, s])
        u = rng.uniform((s / strata), (s + 1) / strata, size=(per, 1))
        rest = rng.uniform(0.0, 1.0, size=(per, d - 1))
        batches.append(np.sort(np.concatenate([u, rest], axis=1), axis=1))
    corners = np.array([[0.0] * (d - i) + [1.0] * i for i in range(d + 1)])
    unit = np.concatenate(batches + [corners])
    ts = lo + unit * (hi - lo)
    vals = geometric_ratio(curve, ts)
    order = np.argsort(vals)

    def objective(t):
        return float(geometric_ratio(curve, np.asarray(t)))

    best_t, best_v, rounds_used = ts[order[0]].copy(), float(vals[order[0]]), 0
    for start in order[:4]:
        t = ts[start].copy()
        v = float(vals[start])
        for r in range(max_rounds):
            before = v
            for i in range(d):
                left = lo if i == 0 else t[i - 1]
                right = hi if i == d - 1 else t[i + 1]
                if right <= left:
                    continue

                def f1(x, i=i):
                    trial = t.copy()
                    trial[i] = x
                    return objective(trial)

                res = minimize_scalar(f1, bounds=(left, right), method="bounded",
                                      options={"xatol": 1e-12 * (hi - lo)})
                for cand in (res.x, left, right):
                    val = f1(cand)
                    if val < v:
                        t[i], v = cand, val
            rounds_used = max(rounds_used, r + 1)
            if before - v <= 1e-13 * abs(before):
                break
        if v < best_v:
            best_t, best_v = t.copy(), v
    best_v = objective(best_t)
    return GeometricCertificate(piece, SAFETY * best_v, tuple(float(x) for x in best_t),
                                int(ts.shape[0]), rounds_used, best_v, (lo, hi), piece_id)
