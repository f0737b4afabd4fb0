"""Integral conditions, psi constants and envelope checks for lattice densities.

None of the combinatorial constants ``C(n, d)`` are computed: every check
here is a boundedness or shape check with an explicit slack factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import DensityGrid, density
from .errors import DivergentMoment, InvalidModel, NoLevyMeasure, NonIntegrable
from .models import ExplicitSymbol, Polar, SubordinateBM, Truncation, base_model
from .profile import PhiProfile, _is_radial, phi_inverse, phi_profile
from .symbol import eval_symbol, hw_index, levy_moment, symbol_values

ENVELOPE_SLACK = 10.0
N_ANGLES = 256
ARC_NODES = 32
ARC_POWER = 4
X_STEP = 0.01


def _re_phi(source, rho: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
    model = base_model(source)
    rho = np.atleast_1d(rho)
    if model.dim == 1:
        pts = rho[:, None]
    else:
        th = 0.0 if theta is None else theta
        # exact zeros on the axes; roundoff cosines would send projections below the tables
        c, s = (0.0 if abs(v) < 1e-12 else v for v in (math.cos(th), math.sin(th)))
        pts = np.stack([rho * c, rho * s], axis=-1)
    return symbol_values(source, pts).real


def _check_integrable(source, t: float, power: float) -> None:
    """Raise when ``exp(-t Re Phi) |xi|^power`` is not integrable."""
    model = base_model(source)
    rep = hw_index(source, [1e8])
    if rep.infinite_suspected:
        return
    if t * rep.ratios[0] <= power + model.dim:
        raise NonIntegrable(
            f"t Re Phi / log|xi| ~ {t * rep.ratios[0]:.3g} does not exceed {power + model.dim}",
            level=t * rep.ratios[0])


def _radial_integral(source, t: float, weight, scale: float, theta: float | None = None) -> float:
    """``int_0^inf exp(-t Re Phi(rho theta)) weight(rho) rho^(d-1) d rho``.

    Trapezoid rule in ``x = log rho``; the integrand decays doubly
    exponentially at both ends, so the rule converges spectrally.
    """
    d = base_model(source).dim
    x0 = math.log(scale)
    x_hi = x0
    while t * _re_phi(source, np.array([math.exp(x_hi)]), theta)[0] <= 800:
        x_hi += math.log(4.0)
        if x_hi > 300:
            raise NonIntegrable("exp(-t Re Phi) does not decay")
    # below x0 - 36 the integrand is under exp(-36 d) of its scale
    x = np.arange(x0 - 36.0, x_hi, X_STEP)
    rho = np.exp(x)
    expo = t * _re_phi(source, rho, theta)
    f = np.where(expo > 745, 0.0, np.exp(-np.minimum(expo, 745))) * weight(rho) * rho ** d
    return float(np.sum(f) * X_STEP)


def _lattice_free_integral(source, t: float, weight) -> float:
    """``int_{R^d} exp(-t Re Phi(xi)) weight(|xi|) d xi``."""
    model = base_model(source)
    prof = phi_profile(model)
    try:
        scale = phi_inverse(prof, 1.0 / t)
    except Exception:
        scale = 1.0
    if model.dim == 1:
        return 2.0 * _radial_integral(source, t, weight, scale)
    if _is_radial(model):
        return 2.0 * math.pi * _radial_integral(source, t, weight, scale)
    angles, w = _angle_rule(model)
    vals = [_radial_integral(source, t, weight, scale, theta=a) for a in angles]
    return float(np.dot(w, vals))


def _angle_rule(model):
    """Quadrature over directions in d=2.

    ``Re Phi`` has ``|<theta, theta_j>|^alpha`` kinks where a direction is
    perpendicular to an atom, so the circle is cut there and each arc gets
    Gauss-Legendre nodes after the substitution ``s^p / (s^p + (1-s)^p)``,
    which flattens the endpoint singularities.  Without atoms the periodic
    trapezoid rule is used.
    """
    if not isinstance(model, Polar) or model.spectral.uniform is not None:
        angles = 2 * math.pi * np.arange(N_ANGLES) / N_ANGLES
        return angles, np.full(N_ANGLES, 2 * math.pi / N_ANGLES)
    dirs, _ = model.spectral.as_atoms()
    cuts = np.unique(np.round(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0])[:, None] + [0.5 * math.pi, 1.5 * math.pi],
                                     2 * math.pi).ravel(), 14))
    ends = np.append(cuts, cuts[0] + 2 * math.pi)
    x, gw = np.polynomial.legendre.leggauss(ARC_NODES)
    u = 0.5 * (x + 1)
    p = ARC_POWER
    den = u ** p + (1 - u) ** p
    frac = u ** p / den
    dfrac = p * (u * (1 - u)) ** (p - 1) / den ** 2
    angles, weights = [], []
    for a, b in zip(ends[:-1], ends[1:]):
        angles.append(a + (b - a) * frac)
        weights.append(0.5 * gw * (b - a) * dfrac)
    return np.concatenate(angles), np.concatenate(weights)


@dataclass(frozen=True)
class IntegralCondition:
    value: float
    bound_ratio: float
    scale: float


def integral_condition(model, t: float, m: int, profile: PhiProfile | None = None) -> IntegralCondition:
    """``int exp(-t Re Phi) |xi|^m d xi`` and its ratio to ``phi^{-1}(1/t)^(m+d)``."""
    if m < 0:
        raise InvalidModel("m must be nonnegative")
    base = base_model(model)
    profile = phi_profile(base) if profile is None else profile
    _check_integrable(model, t, m)
    scale = phi_inverse(profile, 1.0 / t)
    value = _lattice_free_integral(model, t, lambda r: r ** m)
    if not math.isfinite(value):
        raise NonIntegrable("integral is not finite")
    return IntegralCondition(value, value / scale ** (m + base.dim), scale)


def psi_factor(source, n: int, m: int, t: float = 1.0) -> float:
    """Computable part of ``psi(n, m, nu)`` for the law of ``X_t``.

    ``(1 + t int (|y|^2 + |y|^(2 v n)) nu(dy))^n * int exp(-t Re Phi)(1+|xi|)^(n+m) d xi``.
    """
    if n < 0 or m < 0:
        raise InvalidModel("n and m must be nonnegative")
    model = base_model(source)
    if n == 0:
        moment_factor = 1.0
    else:
        if isinstance(model, ExplicitSymbol) and model.kind == "power" and model.alpha < 2:
            raise DivergentMoment("a power-law symbol has an infinite second moment")
        if not isinstance(model, Polar):
            raise NoLevyMeasure(f"{type(model).__name__} has no explicit Levy measure")
        moments = levy_moment(source, 2) + levy_moment(source, max(2, n))
        moment_factor = (1.0 + t * moments) ** n
    _check_integrable(source, t, n + m)
    integral = _lattice_free_integral(source, t, lambda r: (1.0 + r) ** (n + m))
    return moment_factor * integral


@dataclass(frozen=True)
class Envelope:
    sup_value: float
    arg_sup: tuple


def envelope_check(dg: DensityGrid, n: int) -> Envelope:
    """``sup_y |values(y)| (1+|y|)^n`` over the lattice."""
    grid = dg.grid
    y = grid.axis()
    if grid.dim == 1:
        radius = np.abs(y)
        points = y[:, None]
    else:
        y1, y2 = np.meshgrid(y, y, indexing="ij")
        radius = np.hypot(y1, y2)
        points = np.stack([y1, y2], axis=-1)
    weighted = np.abs(dg.values) * (1.0 + radius) ** n
    if not np.all(np.isfinite(weighted)):
        raise InvalidModel("density grid contains non-finite values")
    idx = np.unravel_index(int(np.argmax(weighted)), weighted.shape)
    return Envelope(float(weighted[idx]), tuple(float(v) for v in points[idx]))


@dataclass
class BoundReport:
    n: int
    m: int
    psi_factor: list
    envelope_sup: list
    ratio_series: list
    ts: list
    slack: float = ENVELOPE_SLACK
    verdict: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "t": self.ts, "psi_factor": self.psi_factor,
                "envelope_sup": self.envelope_sup, "ratio": self.ratio_series,
                "slack": self.slack, "verdict": self.verdict}


def bound_report(source, n: int, m: int, ts, grid=None) -> BoundReport:
    """Check ``|d^beta p_t| (1+|y|)^n <= slack * psi(n, m)`` for every ``|beta| <= m`` with ``m <= 1``."""
    if m > 1:
        raise InvalidModel("envelope reports cover derivatives of order <= 1")
    model = base_model(source)
    psis, sups, ratios = [], [], []
    for t in ts:
        psi = psi_factor(source, n, m, t)
        sup = 0.0
        for k in range(model.dim if m else 0):
            beta = [0] * model.dim
            beta[k] = 1
            sup = max(sup, envelope_check(density(source, t, grid, tuple(beta)), n).sup_value)
        if m == 0:
            sup = envelope_check(density(source, t, grid), n).sup_value
        psis.append(psi)
        sups.append(sup)
        ratios.append(sup / psi)
    worst = max(ratios)
    verdict = {"bounded": bool(worst <= ENVELOPE_SLACK), "observed_max": worst}
    return BoundReport(n, m, psis, sups, ratios, list(map(float, ts)), ENVELOPE_SLACK, verdict)


# -------------------------------------------------------- symbol derivatives


@dataclass(frozen=True)
class DerivativeCheck:
    xi: np.ndarray
    first: np.ndarray
    second: np.ndarray
    first_bound: np.ndarray
    second_bound: float
    violations: int


_D1 = (np.array([-2, -1, 1, 2]), np.array([1 / 12, -2 / 3, 2 / 3, -1 / 12]))
_D2 = (np.array([-2, -1, 0, 1, 2]), np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]))


def symbol_derivative_check(model, xis, h: float = 1e-2) -> DerivativeCheck:
    """Finite-difference check of ``|dPhi| <= (1+|xi|) M2`` and ``|d^2 Phi| <= M2``.

    ``M2 = int |y|^2 nu(dy)``.  In d=2 the first derivative is the gradient
    norm and the second is the largest second-order partial.
    """
    m2 = levy_moment(model, 2)
    xis = np.asarray(xis, dtype=float)
    d = base_model(model).dim
    pts = xis.reshape(-1, d)
    first = np.zeros(len(pts))
    second = np.zeros(len(pts))
    eye = np.eye(d)
    for i, p in enumerate(pts):
        grad = []
        for a in range(d):
            off, w = _D1
            vals = eval_symbol(model, p[None, :] + h * off[:, None] * eye[a] if d > 1
                               else p[0] + h * off)
            grad.append(np.dot(w, vals) / h)
        first[i] = math.sqrt(sum(abs(g) ** 2 for g in grad))
        sec = 0.0
        for a in range(d):
            for b in range(a, d):
                if a == b:
                    off, w = _D2
                    vals = eval_symbol(model, p[None, :] + h * off[:, None] * eye[a] if d > 1
                                       else p[0] + h * off)
                    val = np.dot(w, vals) / h ** 2
                else:
                    corners = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
                    val = sum(s * eval_symbol(model, p + h * (sa * eye[a] + sb * eye[b]))
                              for sa, sb, s in corners) / (4 * h * h)
                sec = max(sec, abs(val))
        second[i] = sec
    norms = np.sqrt((pts ** 2).sum(axis=1))
    first_bound = (1.0 + norms) * m2
    violations = int(np.sum(first > first_bound) + np.sum(second > m2))
    return DerivativeCheck(pts, first, second, first_bound, m2, violations)
