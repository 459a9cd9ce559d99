"""Curve description files and the built-in curves.

A spec is JSON of the form::

    {"d": 3,
     "phi": {"type": "series", "center": 0, "radius": 64, "coeffs": [...]}
            | {"type": "builtin", "name": "moment" | "planted_zero" | "sjolin_chen",
               "params": {...}},
     "interval": [lo, hi]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticFunction
from .errors import ValidationError
from .geometry import SimpleCurve
from .restriction import sjolin_chen_check, sjolin_chen_curve
from .series import planted_curve

BUILTINS = ("moment", "planted_zero", "sjolin_chen")


class SpecError(ValidationError):
    pass


@dataclass
class CurveSpec:
    d: int
    phi: dict
    interval: tuple[float, float]
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.d = int(self.d)
        if self.d < 2:
            raise SpecError("d must be at least 2")
        lo, hi = (float(x) for x in self.interval)
        if not lo < hi:
            raise SpecError("interval must satisfy lo < hi")
        self.interval = (lo, hi)
        kind = self.phi.get("type")
        if kind == "series":
            for key in ("center", "radius", "coeffs"):
                if key not in self.phi:
                    raise SpecError(f"series spec lacks {key!r}")
            self.series()  # validate construction rules now
        elif kind == "builtin":
            name = self.phi.get("name")
            if name not in BUILTINS:
                raise SpecError(f"unknown builtin {name!r}; expected one of {BUILTINS}")
            if name == "sjolin_chen":
                p = self.params
                sjolin_chen_check(float(p.get("alpha", 1.0)), float(p.get("beta", 3.0)), self.d)
        else:
            raise SpecError(f"phi type must be 'series' or 'builtin', got {kind!r}")

    @property
    def params(self) -> dict:
        return dict(self.phi.get("params", {}))

    @property
    def name(self) -> str:
        if self.phi["type"] == "builtin":
            return self.phi["name"]
        return "series"

    @property
    def in_class(self) -> bool:
        """False for curves given only in closed form (no series)."""
        return self.name != "sjolin_chen"

    def series(self) -> AnalyticFunction:
        """``phi`` as a series; not available for closed-form builtins."""
        kind = self.phi["type"]
        if kind == "series":
            radius = self.phi["radius"]
            radius = math.inf if radius in ("inf", None) else float(radius)
            return AnalyticFunction(float(self.phi["center"]), radius,
                                    np.asarray(self.phi["coeffs"], dtype=float),
                                    self.phi.get("tail_bound"),
                                    exact=bool(self.phi.get("exact", False)))
        name = self.phi["name"]
        if name == "moment":
            c = np.zeros(self.d + 1)
            c[self.d] = 1.0
            return AnalyticFunction.polynomial(c)
        if name == "planted_zero":
            # phi^(d) = prod (t - root) * exp(t)
            roots = self.params.get("roots", [2.0])
            poly = np.polynomial.polynomial.polyfromroots(roots)
            lo, hi = self.interval
            radius = abs(0.5 * (lo + hi)) + 2.0 ** (self.d + 3) * 0.5 * (hi - lo)
            return planted_curve(poly, self.d, radius=float(self.params.get("radius", radius)))
        raise SpecError(f"builtin {name!r} is given in closed form, not as a series")

    def curve(self) -> SimpleCurve:
        if self.name == "sjolin_chen":
            p = self.params
            return sjolin_chen_curve(float(p.get("alpha", 1.0)), float(p.get("beta", 3.0)), self.d)
        return SimpleCurve(self.d, self.series(), name=self.name)

    def to_dict(self) -> dict:
        return {"d": self.d, "phi": self.phi, "interval": list(self.interval)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "CurveSpec":
        try:
            return cls(data["d"], dict(data["phi"]), tuple(data["interval"]))
        except KeyError as exc:
            raise SpecError(f"spec lacks field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "CurveSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "CurveSpec":
        with open(path) as fh:
            return cls.from_json(fh.read())


def builtin_spec(name: str, d: int = 3, interval=None, **params) -> CurveSpec:
    defaults = {"moment": (0.0, 1.0), "planted_zero": (-1.0, 1.0), "sjolin_chen": (0.0, 0.5)}
    return CurveSpec(d, {"type": "builtin", "name": name, "params": params},
                     tuple(interval or defaults[name]))
