"""Scale-factor models a(t), their inverse b(s), and regularity diagnostics.

All model methods are vectorized over numpy arrays and perform no domain
checks; the module-level functions (:func:`evaluate`, :func:`inverse`, ...)
are the checked scalar API.

Time and scale factor are in geometric units (c = 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import lambertw

from .errors import DomainError, RangeError

_LOG2 = math.log(2.0)


class ScaleFactorModel:
    """Base class for a(t). Subclasses implement :meth:`derivs` and :meth:`b`."""

    kind: ClassVar[str] = ""
    t_min: float = 0.0
    t_max: float = math.inf

    def derivs(self, t):
        """Return ``(a, adot, addot)`` at ``t`` (array or scalar)."""
        raise NotImplementedError

    def b(self, s):
        """Inverse function: the t with a(t) = s."""
        raise NotImplementedError

    def inverse_derivs(self, s):
        # b' = 1/a'(b), b'' = -a''(b)/a'(b)^3; never differenced.
        t = self.b(s)
        _, ad, add = self.derivs(t)
        with np.errstate(over="ignore"):  # ad**3 -> inf gives the right limit b'' -> 0
            return t, 1.0 / ad, -add / ad**3

    def bdot(self, s):
        return 1.0 / self.derivs(self.b(s))[1]

    def bddot(self, s):
        _, ad, add = self.derivs(self.b(s))
        return -add / ad**3

    def accel_ratio(self, s):
        """a''/a'^3 evaluated at t = b(s), i.e. -b''(s)."""
        _, ad, add = self.derivs(self.b(s))
        return add / ad**3

    def a_at_zero(self) -> float:
        return 0.0

    @property
    def a_min(self) -> float:
        return float(self.derivs(np.float64(self.t_min))[0]) if self.t_min > 0 else self.a_at_zero()

    @property
    def a_max(self) -> float:
        if math.isinf(self.t_max):
            return math.inf
        return float(self.derivs(np.float64(self.t_max))[0])

    def knot_values(self):
        """Values of a where its derivatives may jump; None for smooth models."""
        return None

    def knot_times(self):
        return None

    def to_spec(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(ScaleFactorModel):
    """a(t) = t**alpha. alpha = 1 is the Milne universe."""

    alpha: float
    kind: ClassVar[str] = "power_law"

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"power-law exponent must be positive, got {self.alpha!r}")

    def derivs(self, t):
        t = np.asarray(t, dtype=float)
        al = self.alpha
        a = t**al
        ad = al * t ** (al - 1.0)
        add = al * (al - 1.0) * t ** (al - 2.0)
        return a, ad, add

    def b(self, s):
        s = np.asarray(s, dtype=float)
        return s if self.alpha == 1.0 else s ** (1.0 / self.alpha)

    def to_spec(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class Sinh(ScaleFactorModel):
    """a(t) = sinh t (empty universe with positive cosmological constant, k = -1)."""

    kind: ClassVar[str] = "sinh"

    def derivs(self, t):
        t = np.asarray(t, dtype=float)
        s = np.sinh(t)
        return s, np.cosh(t), s

    def b(self, s):
        return np.arcsinh(np.asarray(s, dtype=float))

    def to_spec(self):
        return {"kind": self.kind}


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    big = x > 20.0
    xs = np.where(big, 20.0, x)
    return np.where(big, x - _LOG2 + np.log1p(-np.exp(-2.0 * x)), np.log(np.sinh(xs)))


@dataclass(frozen=True)
class LambdaFluid(ScaleFactorModel):
    """Perfect fluid p = (gamma - 1) rho with cosmological constant, k = 0.

    a(t) = A * sinh(1.5 * sqrt(lam/3) * gamma * t) ** (2 / (3 * gamma)).
    """

    lam: float
    gamma: float = 1.0
    A: float = 1.0
    kind: ClassVar[str] = "lambda_fluid"

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("cosmological constant must be positive")
        if not 0 < self.gamma <= 2:
            raise DomainError("gamma must lie in (0, 2]")
        if not self.A > 0:
            raise DomainError("A must be positive")

    @property
    def rate(self) -> float:
        return 1.5 * math.sqrt(self.lam / 3.0) * self.gamma

    @property
    def power(self) -> float:
        return 2.0 / (3.0 * self.gamma)

    def derivs(self, t):
        t = np.asarray(t, dtype=float)
        c, p = self.rate, self.power
        x = c * t
        with np.errstate(over="ignore"):
            a = self.A * np.exp(p * _log_sinh(x))
        coth = 1.0 / np.tanh(x)
        ad = a * p * c * coth
        add = a * p * c * c * ((p - 1.0) * coth * coth + 1.0)
        return a, ad, add

    def b(self, s):
        s = np.asarray(s, dtype=float)
        return np.arcsinh((s / self.A) ** (1.0 / self.power)) / self.rate

    def to_spec(self):
        return {"kind": self.kind, "lambda": self.lam, "gamma": self.gamma, "A": self.A}


@dataclass(frozen=True)
class LogModel(ScaleFactorModel):
    """a(t) = (t + 1) log(t + 1): inflationary, yet without an event horizon."""

    kind: ClassVar[str] = "log"

    def derivs(self, t):
        t = np.asarray(t, dtype=float)
        lg = np.log1p(t)
        return (1.0 + t) * lg, lg + 1.0, 1.0 / (1.0 + t)

    def b(self, s):
        # (t+1) log(t+1) = s  <=>  log(t+1) = W(s)
        s = np.asarray(s, dtype=float)
        return np.expm1(lambertw(s).real)

    def to_spec(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Tabulated(ScaleFactorModel):
    """Scale factor given by samples, interpolated by a monotone cubic (PCHIP).

    a''(t) comes from the spline's second derivative, which is only piecewise
    linear and discontinuous at the knots; condition values and metric forms
    inherit that roughness.
    """

    samples: tuple[tuple[float, float], ...]
    kind: ClassVar[str] = "tabulated"
    _spline: Any = field(init=False, repr=False, compare=False)
    _d1: Any = field(init=False, repr=False, compare=False)
    _d2: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
            raise DomainError("tabulated model needs at least three (t, a) pairs")
        if not np.all(np.isfinite(arr)):
            raise DomainError("tabulated samples must be finite")
        if np.any(np.diff(arr[:, 0]) <= 0) or np.any(np.diff(arr[:, 1]) <= 0):
            raise DomainError("tabulated samples must be strictly increasing in t and a")
        if arr[0, 0] < 0:
            raise DomainError("tabulated times must be non-negative")
        object.__setattr__(self, "samples", tuple(map(tuple, arr.tolist())))
        spline = PchipInterpolator(arr[:, 0], arr[:, 1], extrapolate=False)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_d1", spline.derivative(1))
        object.__setattr__(self, "_d2", spline.derivative(2))

    @property
    def t_min(self) -> float:
        return self.samples[0][0]

    @property
    def t_max(self) -> float:
        return self.samples[-1][0]

    def a_at_zero(self) -> float:
        return self.samples[0][1] if self.t_min == 0.0 else math.nan

    def derivs(self, t):
        t = np.asarray(t, dtype=float)
        return self._spline(t), self._d1(t), self._d2(t)

    def knot_values(self):
        return np.asarray([p[1] for p in self.samples])

    def knot_times(self):
        return np.asarray([p[0] for p in self.samples])

    def b(self, s):
        s = np.asarray(s, dtype=float)
        spl = self._spline
        knots_t = spl.x
        knots_a = spl(knots_t)
        idx = np.clip(np.searchsorted(knots_a, s, side="right") - 1, 0, len(knots_t) - 2)
        lo = knots_t[idx].copy()
        hi = knots_t[idx + 1].copy()
        a_lo, a_hi = knots_a[idx], knots_a[idx + 1]
        x = lo + (hi - lo) * np.clip((s - a_lo) / (a_hi - a_lo), 0.0, 1.0)
        # Safeguarded Newton inside each monotone cubic piece.
        for _ in range(60):
            f = spl(x) - s
            done = np.abs(f) <= 4e-16 * np.maximum(np.abs(s), 1e-300)
            if np.all(done):
                break
            pos = f > 0
            hi = np.where(pos, x, hi)
            lo = np.where(pos, lo, x)
            d = self._d1(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = x - f / d
            bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
            x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), step))
        return x

    def to_spec(self):
        return {"kind": self.kind, "samples": [list(p) for p in self.samples]}


def milne() -> PowerLaw:
    return PowerLaw(1.0)


# --------------------------------------------------------------------------
# Checked scalar API


def _check_t(model: ScaleFactorModel, t: float) -> float:
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise DomainError(f"time must be positive and finite, got {t!r}")
    if t < model.t_min or t > model.t_max:
        raise RangeError(f"t = {t!r} outside tabulated range [{model.t_min}, {model.t_max}]")
    return t


def evaluate(model: ScaleFactorModel, t: float) -> tuple[float, float, float]:
    """Return ``(a, adot, addot)`` at positive time ``t``."""
    t = _check_t(model, t)
    a, ad, add = model.derivs(t)
    return float(a), float(ad), float(add)


def inverse(model: ScaleFactorModel, s: float) -> tuple[float, float, float]:
    """Return ``(b, bdot, bddot)`` at ``s``, where b is the inverse of a."""
    s = float(s)
    if not s > 0 or not math.isfinite(s):
        raise DomainError(f"scale-factor value must be positive, got {s!r}")
    if s < model.a_min or s > model.a_max:
        raise DomainError(f"s = {s!r} is not attained by the model")
    t, bd, bdd = model.inverse_derivs(s)
    return float(t), float(bd), float(bdd)


def hubble(model: ScaleFactorModel, t: float) -> float:
    a, ad, _ = evaluate(model, t)
    return ad / a


def deceleration(model: ScaleFactorModel, t: float) -> float:
    a, ad, add = evaluate(model, t)
    return -a * add / ad**2


def q_from_densities(omega_m: float, omega_r: float, omega_lambda: float) -> float:
    """Deceleration parameter from density parameters (matter, radiation, Lambda)."""
    for name, v in (("omega_m", omega_m), ("omega_r", omega_r), ("omega_lambda", omega_lambda)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
    return 0.5 * (omega_m - 2.0 * omega_lambda + 2.0 * omega_r)


@dataclass(frozen=True)
class RegularityReport:
    is_regular: bool
    max_condition_value: float
    condition_violations: list[tuple[float, float]]
    big_bang_ok: bool
    monotone_ok: bool
    probe_grid: list[float]


def regularity_check(model: ScaleFactorModel, t_max: float, n_probe: int = 64,
                     tol_condition: float = 1e-9) -> RegularityReport:
    """Probe a(t) on a log-spaced grid in (0, t_max] for the regularity conditions.

    The condition value a*a''/a'^2 must stay <= 1 + tol_condition; a(0) must
    vanish and a' must be positive at every probe.
    """
    if not t_max > 0:
        raise DomainError("t_max must be positive")
    if n_probe < 2:
        raise DomainError("n_probe must be at least 2")
    hi = min(float(t_max), model.t_max)
    lo = max(hi * 1e-6, model.t_min) if model.t_min > 0 else hi * 1e-6
    if model.t_min == 0.0 and isinstance(model, Tabulated):
        lo = max(lo, model.samples[1][0] * 1e-3)
    grid = np.geomspace(lo, hi, n_probe)
    with np.errstate(all="ignore"):
        a, ad, add = model.derivs(grid)
        cond = a * add / ad**2
    finite = np.isfinite(cond)
    monotone_ok = bool(np.all(ad[finite] > 0) and np.all(np.diff(a) > 0))
    viol = [(float(t), float(c)) for t, c in zip(grid, cond)
            if not np.isfinite(c) or c > 1.0 + tol_condition]
    a0 = model.a_at_zero()
    big_bang_ok = bool(a0 == 0.0)
    max_cond = float(np.max(np.where(finite, cond, np.inf)))
    return RegularityReport(
        is_regular=bool(big_bang_ok and monotone_ok and not viol),
        max_condition_value=max_cond,
        condition_violations=viol,
        big_bang_ok=big_bang_ok,
        monotone_ok=monotone_ok,
        probe_grid=[float(t) for t in grid],
    )


# --------------------------------------------------------------------------
# JSON model descriptions


def model_from_spec(spec: Mapping[str, Any]) -> ScaleFactorModel:
    """Build a model from its JSON-style dict, e.g. ``{"kind": "power_law", "alpha": 0.5}``."""
    try:
        kind = spec["kind"]
    except KeyError:
        raise DomainError("model description needs a 'kind' field") from None
    try:
        if kind == "power_law":
            return PowerLaw(float(spec["alpha"]))
        if kind == "milne":
            return milne()
        if kind == "lambda_fluid":
            return LambdaFluid(float(spec["lambda"]), float(spec.get("gamma", 1.0)),
                               float(spec.get("A", 1.0)))
        if kind == "sinh":
            return Sinh()
        if kind == "log":
            return LogModel()
        if kind == "tabulated":
            return Tabulated(tuple(tuple(p) for p in spec["samples"]))
    except KeyError as exc:
        raise DomainError(f"model description for {kind!r} is missing {exc.args[0]!r}") from None
    raise DomainError(f"unknown model kind {kind!r}")


def load_model(path: str | Path) -> ScaleFactorModel:
    with open(path) as fh:
        return model_from_spec(json.load(fh))


def builtin_models() -> dict[str, ScaleFactorModel]:
    """The closed-form regular models exercised by the verification suites."""
    return {
        "power_law_0.5": PowerLaw(0.5),
        "milne": PowerLaw(1.0),
        "power_law_2": PowerLaw(2.0),
        "power_law_3": PowerLaw(3.0),
        "sinh": Sinh(),
        "lambda_fluid": LambdaFluid(3.0, 1.0, 1.0),
        "log": LogModel(),
    }


def sample_model(model: ScaleFactorModel, times: Sequence[float]) -> Tabulated:
    """Tabulate a closed-form model on the given times (must start at 0)."""
    t = np.asarray(times, dtype=float)
    a = np.where(t == 0.0, model.a_at_zero(), model.derivs(np.where(t == 0, 1.0, t))[0])
    return Tabulated(tuple(zip(t.tolist(), a.tolist())))
