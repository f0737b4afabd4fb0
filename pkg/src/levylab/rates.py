"""Total-variation distances, gradient norms and decay-rate fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .density import MAX_N, DensityGrid, GridSpec, auto_grid, density
from .errors import InsufficientSpan, InvalidModel, ShiftTooLarge
from .models import BernsteinSpec, ExplicitSymbol, Layered, Polar, Stable, SubordinateBM, Truncation
from .profile import PhiProfile, phi_inverse, phi_profile
from .radial import INF

SMALL_T = (1e-4, 1e-1)
LARGE_T = (10.0, 1e4)
MONOTONE_SLACK = 0.01


# ----------------------------------------------------------------- distances


def _fractional_shift(values: np.ndarray, frac: np.ndarray) -> np.ndarray:
    """Translate a periodic lattice array by ``frac`` cells (|frac| < 1) via its spectrum."""
    F = np.fft.fftn(values)
    for axis, f in enumerate(frac):
        if f == 0.0:
            continue
        n = values.shape[axis]
        k = np.fft.fftfreq(n)
        phase = np.exp(-2j * np.pi * k * f)
        if n % 2 == 0:
            phase[n // 2] = math.cos(math.pi * f)  # keeps the result real
        shape = [1] * values.ndim
        shape[axis] = -1
        F = F * phase.reshape(shape)
    return np.fft.ifftn(F).real


def tv_distance(dg: DensityGrid, shift, norm: str = "tv") -> float:
    """Distance between ``p`` and ``p(. - shift)`` on the lattice.

    ``norm="tv"`` gives the probabilistic total variation (half the L1
    distance, in [0, 1]); ``norm="var"`` gives the L1 distance in [0, 2].
    Whole cells are shifted exactly, the remaining fraction spectrally.
    Outside the window the tails are taken monotone, so the contribution
    there is the mass in the strips uncovered by the shift.
    """
    if norm not in ("tv", "var"):
        raise InvalidModel(f"unknown norm {norm!r}")
    if any(dg.beta):
        raise InvalidModel("tv_distance needs a density grid (beta = 0)")
    grid = dg.grid
    s = np.atleast_1d(np.asarray(shift, dtype=float))
    if s.shape != (grid.dim,):
        raise InvalidModel(f"shift must have {grid.dim} components")
    if float(np.linalg.norm(s)) >= grid.L / 4:
        raise ShiftTooLarge(f"|shift| = {np.linalg.norm(s):.4g} >= L/4 = {grid.L / 4:.4g}", L=grid.L)
    p = dg.values
    # p(y - s) for s < 0 is the mirror image problem
    for axis in range(grid.dim):
        if s[axis] < 0:
            p = np.flip(p, axis=axis)
    s = np.abs(s)
    cells = s / grid.dy
    whole = np.floor(cells).astype(int)
    frac = cells - whole
    q = _fractional_shift(p, frac) if np.any(frac > 0) else p
    n = grid.N
    a_sl = tuple(slice(k, n) for k in whole)
    b_sl = tuple(slice(0, n - k) for k in whole)
    inner = float(np.abs(p[a_sl] - q[b_sl]).sum())
    covered_a = float(p[a_sl].sum())
    covered_b = float(q[b_sl].sum())
    edges = (p.sum() - covered_a) + (q.sum() - covered_b)
    l1 = (inner + edges) * grid.dy ** grid.dim
    return l1 if norm == "var" else 0.5 * l1


def grad_norm(source, t: float, grid: GridSpec | None = None) -> float:
    """Lattice value of ``int |grad p_t(z)| dz``.

    In d=1 the part outside the window is ``p(-L) + p(L)`` (monotone tails).
    """
    parts = []
    first = density(source, t, grid, beta=1)
    dim = first.grid.dim
    used = first.grid
    parts.append(first.values)
    if dim == 2:
        parts.append(density(source, t, used, beta=(0, 1)).values)
    mag = np.sqrt(sum(v ** 2 for v in parts))
    total = float(mag.sum() * used.dy ** dim)
    if dim == 1:
        p = density(source, t, used).values
        # the lattice starts at -L; +L is the periodic image of index 0
        total += 2.0 * float(p[0])
    return total


def shift_grid(source, t: float, shift, grid: GridSpec | None = None) -> GridSpec | None:
    """Grid for a TV computation at ``shift``.

    An explicit grid is returned unchanged.  Otherwise None (automatic
    sizing) when the automatic window is wide enough, else that window
    widened at fixed spacing until ``L > 8 |shift|``.  Raises ShiftTooLarge
    when that would exceed the largest lattice.
    """
    if grid is not None:
        return grid
    reach = float(np.linalg.norm(np.atleast_1d(np.asarray(shift, dtype=float))))
    g = auto_grid(source, t)
    if g.L > 8 * reach:
        return None
    while g.L <= 8 * reach:
        if 2 * g.N > MAX_N[g.dim]:
            raise ShiftTooLarge(f"|shift| = {reach:.4g} needs L > {8 * reach:.4g} at spacing {g.dy:.3g}, "
                                f"beyond {MAX_N[g.dim]} points per axis", L=g.L)
        g = GridSpec(g.dim, 2 * g.N, 2 * g.L)
    return g


@dataclass(frozen=True)
class FactorizationGap:
    tv_full: float
    tv_truncated: float

    @property
    def holds(self) -> bool:
        return self.tv_full <= self.tv_truncated + 2e-4


def factorization_gap(model, r: float, t: float, grid: GridSpec | None = None, shift=1.0,
                      norm: str = "tv") -> FactorizationGap:
    """TV of the full and of the truncated (jumps <= r) density for one shift."""
    grid = shift_grid(model, t, shift, grid)
    full = tv_distance(density(model, t, grid), shift, norm)
    trunc = tv_distance(density(Truncation(model, r), t, grid), shift, norm)
    return FactorizationGap(full, trunc)


# ----------------------------------------------------------------- rate laws


class RateLaw:
    """A decay law ``t -> f^{-1}(1/t)`` given by the profile ``f``."""

    exponent: float | str = "non-power"

    def inverse(self, s):
        raise NotImplementedError

    def forward(self, r):
        raise NotImplementedError

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise InvalidModel("rate laws need t > 0")
        out = np.vectorize(lambda tt: self.inverse(1.0 / tt))(t)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerLaw(RateLaw):
    """``t^p`` with ``p < 0``, the inverse of ``f(r) = r^(-1/p)``."""

    p: float

    def __post_init__(self):
        if not self.p < 0:
            raise InvalidModel("a decay law needs a negative exponent")

    @property
    def exponent(self):
        return self.p

    def inverse(self, s):
        return s ** (-self.p)

    def forward(self, r):
        return r ** (-1.0 / self.p)


def _invert_increasing(fn, s: float) -> float:
    """Solve ``fn(r) = s`` for an increasing ``fn`` on (0, inf) in log r."""
    g = lambda x: math.log(fn(math.exp(x))) - math.log(s)
    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2
    while g(hi) < 0:
        hi *= 2
    return math.exp(brentq(g, lo, hi, xtol=1e-14, rtol=1e-14))


@dataclass(frozen=True)
class InverseBernstein(RateLaw):
    """``f^{-1}(1/t)`` for the profile ``rho -> f(rho^2)`` of a subordinate BM."""

    spec: BernsteinSpec
    regime: str = "large"

    def __post_init__(self):
        if self.regime not in ("small", "large"):
            raise InvalidModel("regime must be 'small' or 'large'")

    @property
    def exponent(self):
        a, b = self.spec.alpha, self.spec.beta
        if self.regime == "large":
            return -1.0 / (a + b)
        return -1.0 / a if b == 0 else "non-power"

    def forward(self, r):
        return float(self.spec.f(r * r))

    def inverse(self, s):
        return _invert_increasing(self.forward, s)


@dataclass(frozen=True)
class LogCorrectedPower(RateLaw):
    """``[t^{-1} (log(1 + 1/t))^{-beta/2}]^{1/alpha}``."""

    alpha: float
    beta: float

    @property
    def exponent(self):
        return -1.0 / self.alpha if self.beta == 0 else "non-power"

    def inverse(self, s):
        return (s * math.log1p(s) ** (-self.beta / 2)) ** (1.0 / self.alpha)

    def forward(self, r):
        return _invert_increasing(self.inverse, r)


@dataclass(frozen=True, eq=False)
class ProfileLaw(RateLaw):
    """``phi^{-1}(1/t)`` read off a tabulated profile."""

    profile: PhiProfile

    def __repr__(self):
        lo, hi = self.profile.range
        return f"ProfileLaw(phi range [{lo:.3g}, {hi:.3g}])"

    def inverse(self, s):
        return phi_inverse(self.profile, s)

    def forward(self, r):
        return float(self.profile.phi(r))


def theory_law(model, regime: str = "large") -> RateLaw:
    """The rate law ``f^{-1}(1/t)`` predicted for ``model`` in a regime.

    Small t follows the behaviour of ``Re Phi`` at infinity, large t its
    behaviour at the origin.  Models without a closed asymptote fall back to
    the tabulated profile.
    """
    if regime not in ("small", "large"):
        raise InvalidModel("regime must be 'small' or 'large'")
    if isinstance(model, ExplicitSymbol) and model.kind == "power":
        return PowerLaw(-1.0 / model.alpha)
    if isinstance(model, SubordinateBM):
        b = model.bernstein
        if regime == "small":
            return LogCorrectedPower(b.alpha, b.beta) if b.beta else PowerLaw(-1.0 / b.alpha)
        return InverseBernstein(b, "large")
    if isinstance(model, Polar):
        rad = model.radial
        if isinstance(rad, Stable):
            return PowerLaw(-1.0 / rad.alpha)
        if isinstance(rad, Layered):
            if regime == "small" or rad.beta == INF:
                return PowerLaw(-1.0 / rad.alpha) if regime == "small" else PowerLaw(-0.5)
            return PowerLaw(-1.0 / min(rad.beta, 2.0))
        if regime == "small":
            return PowerLaw(-1.0 / rad.alpha)
    return ProfileLaw(phi_profile(model))


# ------------------------------------------------------------------- series


@dataclass(frozen=True)
class RateSeries:
    quantity: str
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.quantity not in ("tv", "grad"):
            raise InvalidModel("quantity must be 'tv' or 'grad'")
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or len(t) == 0:
            raise InvalidModel("t and values must be equal-length 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise InvalidModel("t must be strictly increasing")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise InvalidModel("values must be positive and finite")
        if np.any(v[1:] > v[:-1] * (1 + MONOTONE_SLACK)):
            i = int(np.argmax(v[1:] / v[:-1]))
            raise InvalidModel(f"{self.quantity} increases between t={t[i]:.4g} and t={t[i + 1]:.4g}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    r_squared: float
    theory_exponent: float | str
    ratio_stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr, "r2": self.r_squared,
                "theory_exponent": self.theory_exponent, **self.ratio_stats}


def _decade_drift(t: np.ndarray, ratio: np.ndarray) -> float:
    """Largest ``max/min - 1`` of the ratio inside any window of one decade."""
    lt = np.log10(t)
    worst = 0.0
    for i in range(len(t)):
        inside = (lt >= lt[i]) & (lt <= lt[i] + 1 + 1e-12)
        r = ratio[inside]
        worst = max(worst, float(r.max() / r.min() - 1.0))
    return worst


def rate_fit(series: RateSeries, law: RateLaw) -> RateFit:
    """Log-log slope of the series and the drift of ``value / law(t)``."""
    t, v = series.t, series.values
    if len(t) < 8 or math.log10(t[-1] / t[0]) < 2 - 1e-12:
        raise InsufficientSpan(f"need >= 8 points over >= 2 decades, got {len(t)} over "
                               f"{math.log10(t[-1] / t[0]):.2f}", points=len(t))
    reg = stats.linregress(np.log(t), np.log(v))
    ratio = v / law(t)
    r2 = float(min(max(reg.rvalue ** 2, 0.0), 1.0))
    ratio_stats = {
        "min": float(ratio.min()),
        "max": float(ratio.max()),
        "drift": float(ratio.max() / ratio.min() - 1.0),
        "drift_per_decade": _decade_drift(t, ratio),
    }
    return RateFit(float(reg.slope), float(reg.stderr), r2, law.exponent, ratio_stats)


def _profile_of(spec) -> tuple:
    if isinstance(spec, BernsteinSpec):
        return (lambda r: float(spec.f(r * r))), (lambda s: _invert_increasing(lambda r: float(spec.f(r * r)), s))
    if isinstance(spec, RateLaw):
        return spec.forward, spec.inverse
    raise InvalidModel("hypothesis_report needs a BernsteinSpec or a RateLaw")


def hypothesis_report(spec, regime: str = "large") -> dict:
    """Finite-grid stand-ins for the doubling and logarithmic hypotheses.

    ``regime="large"`` (t -> infinity) probes ``s = 1/t`` in [1e-6, 1e-1] and
    ``f(r)|log r|`` on [1e-7, 1e-1]; ``regime="small"`` probes s in [10, 1e6],
    where only the doubling condition is assumed, so ``logtest_min`` is None.
    """
    if regime not in ("small", "large"):
        raise InvalidModel("regime must be 'small' or 'large'")
    forward, inverse = _profile_of(spec)
    s = np.logspace(-6, -1, 61) if regime == "large" else np.logspace(1, 6, 61)
    doubling = np.array([inverse(2 * x) / inverse(x) for x in s])
    report = {"regime": regime, "doubling_max": float(doubling.max()), "logtest_min": None}
    if regime == "large":
        r = np.logspace(-7, -1, 61)
        report["logtest_min"] = float(min(forward(x) * abs(math.log(x)) for x in r))
    return report


def baseline_compare(series: RateSeries, x_minus_y: float, norm: str = "tv") -> list:
    """Pair each value with ``C (1 + |x - y|)/sqrt(t) ^ cap``.

    ``C`` is calibrated at the first point and ``cap`` is 1 for the TV norm
    or 2 for the Var norm.  Rows are ``(t, value, baseline, flag)``, flagged
    when the measured value beats the baseline by more than 10x.
    """
    cap = {"tv": 1.0, "var": 2.0}[norm]
    t, v = series.t, series.values
    c = v[0] * math.sqrt(t[0]) / (1.0 + abs(x_minus_y))
    rows = []
    for ti, vi in zip(t, v):
        base = min(c * (1.0 + abs(x_minus_y)) / math.sqrt(ti), cap)
        rows.append((float(ti), float(vi), float(base), bool(10.0 * vi < base)))
    return rows


# -------------------------------------------------------------------- sweeps


def tv_series(source, ts, shift=1.0, grid: GridSpec | None = None, norm: str = "tv") -> RateSeries:
    ts = np.sort(np.asarray(ts, dtype=float))
    vals = [tv_distance(density(source, t, shift_grid(source, t, shift, grid)), shift, norm) for t in ts]
    return RateSeries("tv", ts, np.array(vals))


def grad_series(source, ts, grid: GridSpec | None = None) -> RateSeries:
    ts = np.sort(np.asarray(ts, dtype=float))
    return RateSeries("grad", ts, np.array([grad_norm(source, t, grid) for t in ts]))
