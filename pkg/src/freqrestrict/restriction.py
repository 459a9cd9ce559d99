"""Extension operators on simple curves, evaluated on box grids.

``E f(x) = int f(t) exp(2 pi i <x, gamma(t)>) lambda(t) dt`` (weighted) and
the same without ``lambda`` (unweighted).  On a tensor grid the exponential
factorises over coordinates, so the grid values are computed as a chain of
outer products followed by one matrix product.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded, CenterInside, CostGuard, InsufficientGaps, OutOfRange
from .geometry import SimpleCurve, affine_density, torsion_constant
from .quadrature import panel_rule

PANEL_CAP = 2 ** 16
PANEL_ORDER = 16
MIN_PANELS = 16
GRID_CAP = 2 ** 24
_CHUNK = 2 ** 22


@dataclass(frozen=True)
class TestFunction:
    kind: str = "indicator"
    lo: float = 0.0
    hi: float = 1.0
    smoothness: float = 1.0
    amplitude: float = 1.0

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if self.kind not in ("indicator", "bump"):
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if not self.lo < self.hi:
            raise ValueError("support must satisfy lo < hi")
        if not self.smoothness > 0:
            raise ValueError("smoothness must be positive")

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= self.lo) & (t <= self.hi)
        if self.kind == "indicator":
            return self.amplitude * inside.astype(float)
        u = (2 * t - self.lo - self.hi) / (self.hi - self.lo)
        out = np.zeros_like(t)
        core = np.abs(u) < 1
        out[core] = np.exp(-self.smoothness / (1 - u[core] ** 2))
        return self.amplitude * out


@dataclass(frozen=True)
class GridSpec:
    """``n`` points per axis on ``[-B_k, B_k]``; ``box`` is one width or one per axis."""

    box: float | tuple[float, ...]
    n: int
    d: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("need at least 8 points per axis")
        if self.n ** self.d > GRID_CAP:
            raise CostGuard(f"grid {self.n}^{self.d} exceeds {GRID_CAP} points")
        if len(self.half_widths) != self.d or min(self.half_widths) <= 0:
            raise ValueError("box half-widths must be positive, one per axis")

    @property
    def half_widths(self) -> tuple[float, ...]:
        if isinstance(self.box, (int, float)):
            return (float(self.box),) * self.d
        return tuple(float(b) for b in self.box)

    def axis(self, k: int) -> np.ndarray:
        b = self.half_widths[k]
        return np.linspace(-b, b, self.n)

    def trapezoid_weights(self, k: int) -> np.ndarray:
        h = 2 * self.half_widths[k] / (self.n - 1)
        w = np.full(self.n, h)
        w[0] = w[-1] = h / 2
        return w


def comoving_grid(grid: GridSpec, M: float) -> GridSpec:
    """The image of ``grid`` under ``x_d -> x_d / M``, the dual of ``phi -> M phi``."""
    widths = list(grid.half_widths)
    widths[-1] /= M
    return GridSpec(tuple(widths), grid.n, grid.d)


def scale_curve(curve: SimpleCurve, M: float) -> SimpleCurve:
    """The curve with last coordinate ``M * phi``."""
    if curve.series:
        return SimpleCurve(curve.dim, curve.phi.scale(M), name=f"{M}*{curve.name}")
    fns = [(lambda t, g=g: M * g(t)) for g in curve.derivs]
    return SimpleCurve(curve.dim, derivs=fns, name=f"{M}*{curve.name}")


@dataclass(frozen=True)
class ExponentPair:
    p: float
    q: float
    p_prime: float
    d: int

    @property
    def q_prime(self) -> float:
        return math.inf if self.q == 1 else self.q / (self.q - 1)


def exponent_pair(p: float, d: int) -> ExponentPair:
    """``p' = p/(p-1)`` and ``q = 2p'/(d^2+d)`` for ``1 < p < (d^2+d+2)/(d^2+d)``."""
    top = Fraction(d * d + d + 2, d * d + d)
    if not 1 < p < top:
        raise OutOfRange(f"p = {p} outside the admissible range (1, {top}) for d = {d}")
    p_prime = p / (p - 1)
    return ExponentPair(float(p), float(2 * p_prime / (d * d + d)), float(p_prime), d)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass
class QuadratureInfo:
    panels: int
    nodes: int
    requested_panels: int
    budget_limited: bool


def _max_phase_rate(curve: SimpleCurve, f: TestFunction, half_widths) -> float:
    t = np.linspace(f.lo, f.hi, 1025)
    gp = np.abs(curve.gamma_prime(t))
    return float(np.max(gp @ np.asarray(half_widths, dtype=float)))


def _panel_count(rate: float, length: float) -> int:
    # panel length at most (1/8) * 2 pi / rate
    if rate == 0:
        return MIN_PANELS
    return max(MIN_PANELS, math.ceil(length * rate * 8 / (2 * math.pi)))


def _nodes(curve: SimpleCurve, f: TestFunction, rate: float, weighted: bool,
           panel_cap: int, allow_degraded: bool):
    wanted = _panel_count(rate, f.hi - f.lo)
    limited = wanted > panel_cap
    if limited and not allow_degraded:
        raise BudgetExceeded(f"oscillation needs {wanted} panels, cap is {panel_cap}")
    panels = min(wanted, panel_cap)
    t, w = panel_rule(f.lo, f.hi, panels, PANEL_ORDER)
    amp = w * f(t)
    if weighted:
        amp = amp * affine_density(curve, t)
    return t, amp, QuadratureInfo(panels, int(t.size), wanted, limited)


def extension_eval(curve: SimpleCurve, f: TestFunction, x, weighted: bool = True,
                   panel_cap: int = PANEL_CAP, allow_degraded: bool = False,
                   return_info: bool = False):
    """Extension operator at one point or a batch of points ``x`` (shape ``(..., d)``)."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, curve.dim)
    t = np.linspace(f.lo, f.hi, 1025)
    rate = float(np.max(np.abs(pts @ curve.gamma_prime(t).T))) if pts.size else 0.0
    t, amp, info = _nodes(curve, f, rate, weighted, panel_cap, allow_degraded)
    g = curve.gamma(t)
    out = np.empty(pts.shape[0], dtype=complex)
    step = max(1, _CHUNK // t.size)
    for i in range(0, pts.shape[0], step):
        out[i:i + step] = np.exp(2j * np.pi * (pts[i:i + step] @ g.T)) @ amp
    out = out[0] if x.ndim == 1 else out.reshape(x.shape[:-1])
    return (out, info) if return_info else out


def extension_on_grid(curve: SimpleCurve, f: TestFunction, grid: GridSpec, weighted: bool = True,
                      panel_cap: int = PANEL_CAP, allow_degraded: bool = False):
    """Extension operator on every point of ``grid`` as an ``(n,)*d`` array."""
    if grid.d != curve.dim:
        raise ValueError("grid and curve dimensions differ")
    rate = _max_phase_rate(curve, f, grid.half_widths)
    t, amp, info = _nodes(curve, f, rate, weighted, panel_cap, allow_degraded)
    g = curve.gamma(t)
    d, n = grid.d, grid.n
    total = np.zeros(n ** (d - 1) * n, dtype=complex).reshape(n ** (d - 1), n)
    step = max(1, _CHUNK // n ** (d - 1))
    for i in range(0, t.size, step):
        sl = slice(i, i + step)
        factors = [np.exp(2j * np.pi * np.outer(grid.axis(k), g[sl, k])) for k in range(d)]
        acc = amp[None, sl].astype(complex)
        for k in range(d - 1):
            acc = (acc[:, None, :] * factors[k][None, :, :]).reshape(-1, acc.shape[-1])
        total += acc @ factors[-1].T
    return total.reshape((n,) * d), info


def grid_norm(values: np.ndarray, grid: GridSpec, power: float) -> float:
    """``L^power`` norm over the box by the product trapezoid rule."""
    w = np.ones(())
    for k in range(grid.d):
        w = np.multiply.outer(w, grid.trapezoid_weights(k))
    return float(np.sum(w * np.abs(values) ** power) ** (1.0 / power))


def source_norm(curve: SimpleCurve, f: TestFunction, q_prime: float, panels: int = 256) -> float:
    """``||f||_{L^q'(lambda dt)}`` by composite Gauss-Legendre."""
    t, w = panel_rule(f.lo, f.hi, panels, PANEL_ORDER)
    lam = affine_density(curve, t)
    return float(np.dot(w, np.abs(f(t)) ** q_prime * lam) ** (1.0 / q_prime))


@dataclass
class NormReport:
    curve: str
    test_function: dict
    exponents: dict
    extension_norm: float
    source_norm: float
    ratio: float | None
    grid: dict
    quadrature: dict
    weighted: bool = True
    flags: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def extension_norm(curve: SimpleCurve, f: TestFunction, pair: ExponentPair, grid: GridSpec,
                   weighted: bool = True, panel_cap: int = PANEL_CAP,
                   allow_degraded: bool = False) -> NormReport:
    """Extension norm over the grid box against the source norm of ``f``."""
    if pair.d != curve.dim:
        raise ValueError("exponent pair and curve dimensions differ")
    values, info = extension_on_grid(curve, f, grid, weighted, panel_cap, allow_degraded)
    ext = grid_norm(values, grid, pair.p_prime)
    src = source_norm(curve, f, pair.q_prime, max(256, info.panels))
    flags = ["BoxTruncated"]
    if info.budget_limited:
        flags.append("BudgetLimited")
    if src == 0:
        flags.append("ZeroInput")
    return NormReport(
        curve=curve.name,
        test_function=asdict(f),
        exponents={"p": pair.p, "q": pair.q, "p_prime": pair.p_prime, "d": pair.d},
        extension_norm=ext,
        source_norm=src,
        ratio=ext / src if src > 0 else None,
        grid={"half_widths": list(grid.half_widths), "n": grid.n, "d": grid.d},
        quadrature={"panel_order": PANEL_ORDER, **asdict(info)},
        weighted=weighted,
        flags=flags,
    )


# --------------------------------------------------------------------------
# dyadic annuli
# --------------------------------------------------------------------------

DYADIC_DEPTH = 40


def dyadic_partition(lo: float, hi: float, center: float) -> list[tuple[int, float, float]]:
    """Nonempty pieces ``{t in [lo, hi]: 2^(n-1) < |t - center| <= 2^n}``.

    When the center is an endpoint the annuli accumulate there; the ones
    more than ``DYADIC_DEPTH`` octaves below the interval length are dropped.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if lo < center < hi:
        raise CenterInside(f"center {center} inside ({lo}, {hi})")
    side = 1.0 if center <= lo else -1.0
    near, far = sorted((abs(lo - center), abs(hi - center)))
    n_hi = math.ceil(math.log2(far))
    if near > 0:
        n_lo = math.ceil(math.log2(near))
    else:
        n_lo = math.floor(math.log2(far)) - DYADIC_DEPTH
    out = []
    for n in range(n_lo, n_hi + 1):
        a, b = max(2.0 ** (n - 1), near), min(2.0 ** n, far)
        if b <= a:
            continue
        ends = sorted((center + side * a, center + side * b))
        out.append((n, ends[0], ends[1]))
    return out


# --------------------------------------------------------------------------
# counterexample family
# --------------------------------------------------------------------------

def sjolin_chen_check(alpha: float, beta: float, d: int) -> None:
    if not (alpha > 0 and beta > 0 and 2 * beta > (d + 1) * alpha):
        raise OutOfRange(f"need alpha, beta > 0 and 2*beta > (d+1)*alpha; got "
                         f"2*{beta} <= {d + 1}*{alpha}" if alpha > 0 and beta > 0
                         else "alpha and beta must be positive")


def sjolin_chen_derivatives(alpha: float, beta: float, d: int) -> list[Callable]:
    """Callables for ``phi^(k)``, ``k = 0..d``, of ``exp(-t^-alpha) sin(t^-beta)``."""
    import sympy as sp

    sjolin_chen_check(alpha, beta, d)
    t = sp.symbols("t", positive=True)
    expr = sp.exp(-t ** (-sp.nsimplify(alpha))) * sp.sin(t ** (-sp.nsimplify(beta)))
    funcs = []
    for _ in range(d + 1):
        funcs.append(sp.lambdify(t, expr, "numpy"))
        expr = sp.diff(expr, t)
    return funcs


def sjolin_chen_curve(alpha: float, beta: float, d: int = 3) -> SimpleCurve:
    return SimpleCurve(d, derivs=sjolin_chen_derivatives(alpha, beta, d),
                       name=f"sjolin-chen(alpha={alpha}, beta={beta})")


def rescaled_piece(derivs: Sequence[Callable], d: int, t0: float, length: float,
                   scale: float | None = None, normalization: str = "sup",
                   name: str = "") -> tuple[SimpleCurve, float]:
    """The curve ``s -> (s, ..., s^(d-1), phi(t0 + L s) / S)`` on ``[0, 1]``.

    It differs from ``gamma`` restricted to ``[t0, t0 + L]`` by a change of
    parameter and an invertible affine map of the first ``d-1`` coordinates,
    followed by scaling the last one.  Unless ``scale`` is given, ``S`` makes
    ``max |phi_S| = 1`` ("sup") or ``max |phi_S^(d)| = 1`` ("torsion").
    """
    if scale is None:
        s = np.linspace(0.0, 1.0, 1 << 16)
        if normalization == "sup":
            scale = float(np.max(np.abs(derivs[0](t0 + length * s))))
        elif normalization == "torsion":
            scale = float(np.max(np.abs(derivs[d](t0 + length * s)))) * length ** d
        else:
            raise ValueError(f"unknown normalization {normalization!r}")
    fns = [(lambda s, k=k: length ** k * derivs[k](t0 + length * np.asarray(s)) / scale)
           for k in range(d + 1)]
    return SimpleCurve(d, derivs=fns, name=name), scale


@dataclass
class ScanRow:
    scale: int
    ratio: float | None
    flags: list[str]
    report: NormReport | None = None
    error: str | None = None


def counterexample_scan(alpha: float, beta: float, d: int = 3, m_max: int = 5,
                        pair: ExponentPair | None = None, grid: GridSpec | None = None,
                        normalize: bool = True, panel_cap: int = PANEL_CAP,
                        allow_degraded: bool = False, normalization: str = "sup") -> list[ScanRow]:
    """Weighted ratios for ``f_m = 1_[2^(-m-1), 2^(-m)]``, ``m = 1..m_max``.

    With ``normalize`` each scale is measured on the affinely rescaled curve
    of :func:`rescaled_piece` (the weighted critical-line ratio over
    ``R^d`` does not change under these maps), so one reference box serves
    every scale; ``normalization`` picks the last-coordinate scaling.
    Otherwise the raw curve and the raw indicators are used.
    """
    derivs = sjolin_chen_derivatives(alpha, beta, d)
    pair = pair or exponent_pair(Fraction(d * d + d, d * d + d - 1), d)
    grid = grid or GridSpec(8.0, 32, d)
    raw = SimpleCurve(d, derivs=derivs, name=f"sjolin-chen(alpha={alpha}, beta={beta})")
    rows = []
    for m in range(1, m_max + 1):
        lo, hi = 2.0 ** (-m - 1), 2.0 ** (-m)
        if normalize:
            curve, S = rescaled_piece(derivs, d, lo, hi - lo, normalization=normalization,
                                      name=f"{raw.name}, scale {m}")
            f = TestFunction("indicator", 0.0, 1.0)
        else:
            curve, S, f = raw, 1.0, TestFunction("indicator", lo, hi)
        try:
            rep = extension_norm(curve, f, pair, grid, True, panel_cap, allow_degraded)
        except BudgetExceeded as exc:
            rows.append(ScanRow(m, None, ["BudgetExceeded"], None, str(exc)))
            continue
        rep.extra.update({"scale": m, "interval": [lo, hi], "normalization": S,
                          "normalized": normalize})
        rows.append(ScanRow(m, rep.ratio, list(rep.flags), rep))
    return rows


def longest_increasing_run(values: Sequence[float | None]) -> int:
    best = run = 0
    prev = None
    for v in values:
        if v is None:
            run, prev = 0, None
            continue
        run = run + 1 if prev is not None and v > prev else 1
        prev = v
        best = max(best, run)
    return best


# --------------------------------------------------------------------------
# multilinear decay
# --------------------------------------------------------------------------

@dataclass
class MultilinearResult:
    K_fit: float
    gaps: list[int]
    ratios: list[float]
    annuli: list[list[int]]
    residual: float
    flags: list[str]

    def to_dict(self) -> dict:
        return asdict(self)


def multilinear_decay_experiment(curve: SimpleCurve, piece, gaps: Sequence[int],
                                 pair: ExponentPair, grid: GridSpec,
                                 panel_cap: int = PANEL_CAP) -> MultilinearResult:
    """Decay of ``||prod_l E f_l||_{p'/d}`` in the spread of dyadic annuli.

    ``f_l`` are indicators of annuli about the piece's center: the outermost
    annulus ``n_D``, the one ``gap`` octaves further in, and one halfway.
    The fitted slope of ``log2(ratio)`` against ``gap`` is ``-K_fit``.
    """
    d = curve.dim
    gaps = [int(g) for g in gaps]
    if len(set(gaps)) < 3:
        raise InsufficientGaps(f"need at least 3 distinct gaps, got {sorted(set(gaps))}")
    annuli = {n: (a, b) for n, a, b in dyadic_partition(piece.lo, piece.hi, piece.center)}
    top = max(annuli)
    ratios, used, flags = [], [], []
    for g in gaps:
        ns = sorted({top - g, top - (g + 1) // 2, top})
        while len(ns) < d:
            ns.append(top)
        if any(n not in annuli for n in ns):
            raise InsufficientGaps(f"gap {g} reaches outside the available annuli")
        prod = np.ones((grid.n,) * d, dtype=complex)
        denom = 1.0
        for n in ns[:d]:
            f = TestFunction("indicator", *annuli[n])
            vals, info = extension_on_grid(curve, f, grid, True, panel_cap, allow_degraded=True)
            if info.budget_limited:
                flags.append(f"BudgetLimited(gap={g})")
            prod *= vals
            denom *= source_norm(curve, f, pair.q_prime)
        ratios.append(grid_norm(prod, grid, pair.p_prime / d) / denom)
        used.append(ns[:d])
    y = np.log2(ratios)
    slope, intercept = np.polyfit(gaps, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * np.asarray(gaps) + intercept)) ** 2)))
    if resid > 0.25 * max(abs(slope), 1e-12) * (max(gaps) - min(gaps)):
        flags.append("UnstableFit")
    return MultilinearResult(float(-slope), gaps, [float(r) for r in ratios], used, resid, flags)


# --------------------------------------------------------------------------
# text outputs
# --------------------------------------------------------------------------

def scan_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scale", "ratio", "flags"])
    for r in rows:
        w.writerow([r.scale, "" if r.ratio is None else repr(r.ratio), ";".join(r.flags)])
    return buf.getvalue()


def gnuplot_data(xs: Sequence[float], ys: Sequence[float | None], header: str = "") -> str:
    lines = [f"# {header}"] if header else []
    lines += [f"{x} {y!r}" for x, y in zip(xs, ys) if y is not None]
    return "\n".join(lines) + "\n"
