"""Transition densities by lattice Fourier inversion.

The density (or a spatial derivative) of ``X_t`` is recovered from
``(-i xi)^beta exp(-t Phi(xi))`` on the lattice ``y_j = -L + j dy`` with
``dy = 2L/N``, frequencies ``xi_k = k pi / L`` and cut-off
``Xi = pi N / (2L)``.  The discrete transform returns the periodisation
``sum_m p(y + 2Lm)``; in d=1 the periodic images of the heavy tail are
subtracted again (see :class:`SeriesTail` and :class:`MeasureTail`).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn
from scipy.special import poch, zeta

from .errors import (GridUnderresolved, GridUnderresolvedWarning, HWViolated, InvalidModel,
                     OutOfRange)
from .models import ExplicitSymbol, Polar, Stable, SubordinateBM, Truncation, base_model
from .profile import PhiProfile, h_of_t, phi_inverse, phi_profile
from .radial import INF, moment
from .symbol import hw_index, min_re_symbol, symbol_values

DEFAULT_N = {1: 2 ** 18, 2: 2 ** 10}
MAX_N = {1: 2 ** 22, 2: 2 ** 12}
WIDTHS = 40.0          # half-extent in units of the natural width 1/phi^{-1}(1/t)
EDGE_DECAY = 27.0      # required t Re Phi at the cut-off
HW_PROBE = 1e8
ALIAS_TOL = 1e-4


@dataclass(frozen=True)
class GridSpec:
    dim: int = 1
    N: int = 2 ** 18
    L: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidModel("grid dimension must be 1 or 2")
        if self.N < 16 or self.N & (self.N - 1):
            raise InvalidModel(f"N must be a power of two >= 16, got {self.N}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidModel("L must be positive and finite")

    @property
    def dy(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @property
    def xi_max(self) -> float:
        return math.pi * self.N / (2.0 * self.L)

    def axis(self) -> np.ndarray:
        return -self.L + self.dy * np.arange(self.N)

    def freqs(self) -> np.ndarray:
        """Frequencies in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.dy)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """A density or derivative sampled on a regular lattice."""

    grid: GridSpec
    t: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def y(self) -> np.ndarray:
        return self.grid.axis()

    @property
    def cell(self) -> float:
        return self.grid.dy ** self.grid.dim

    @property
    def beta(self) -> tuple:
        return tuple(self.meta.get("beta", (0,) * self.grid.dim))

    def sidecar(self) -> dict:
        return {"dim": self.grid.dim, "N": self.grid.N, "L": self.grid.L, "t": self.t,
                "beta": list(self.beta), "mass": self.diagnostics.get("mass"),
                "truncation": self.meta.get("truncation", "full")}

    def save(self, path) -> Path:
        """Row-major float64 array plus a JSON sidecar ``<path>.json``."""
        path = Path(path)
        np.ascontiguousarray(self.values, dtype="<f8").tofile(path)
        side = path.with_name(path.name + ".json")
        side.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "DensityGrid":
        path = Path(path)
        side = json.loads(path.with_name(path.name + ".json").read_text())
        grid = GridSpec(side["dim"], side["N"], side["L"])
        shape = (grid.N,) * grid.dim
        values = np.fromfile(path, dtype="<f8").reshape(shape)
        return cls(grid, side["t"], values, {"beta": tuple(side["beta"])}, {"mass": side["mass"]})

    def to_csv(self, path) -> Path:
        if self.grid.dim != 1:
            raise InvalidModel("CSV export is only defined for d=1")
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("y,p\n")
            for yy, pp in zip(self.y, self.values):
                fh.write(f"{yy:.17g},{pp:.17g}\n")
        return path


# ------------------------------------------------------------------ tails


def _tail_amplitude(s):
    """Coefficient of |y|^(-1-s) in the inverse transform of -|xi|^s."""
    if abs(s / 2.0 - round(s / 2.0)) < 1e-12:
        # even integers: the transform of |xi|^s is supported at the origin
        return 0.0
    return gamma_fn(1.0 + s) * math.sin(math.pi * s / 2.0) / math.pi


def _on_coarse(fn, y, L, n=2049):
    """Evaluate a function that is smooth on the scale L through a cubic spline."""
    ys = np.linspace(-L, L, n)
    return CubicSpline(ys, fn(ys))(y)


class SeriesTail:
    """Tail series of a law whose exponent is ``c |xi|^gamma`` near zero.

    ``p(y) ~ sum_k (-1)^(k+1) (tc)^k / k! A(k gamma) |y|^(-1-k gamma)``; this
    is exact (convergent) for symmetric stable laws with ``gamma < 1``.
    """

    MAX_TERMS = 8

    def __init__(self, c: float, gamma: float, t: float):
        self.gamma = gamma
        coeffs = []
        for k in range(1, self.MAX_TERMS + 2):
            coeffs.append((-1) ** (k + 1) * (t * c) ** k / math.factorial(k) * _tail_amplitude(k * gamma))
        self._coeffs = coeffs

    def _terms(self, L):
        mags = [abs(a) * L ** (-k * self.gamma) for k, a in enumerate(self._coeffs, start=1)]
        keep = self.MAX_TERMS
        last = mags[0]
        for k in range(1, self.MAX_TERMS):
            # stop once the asymptotic series starts to grow
            if mags[k] > last > 0:
                keep = k
                break
            if mags[k] > 0:
                last = mags[k]
        return [(k + 1, self._coeffs[k]) for k in range(keep)], keep

    def _images(self, y, L, b):
        out = np.zeros_like(y)
        terms, _ = self._terms(L)
        for k, a in terms:
            if a == 0.0:
                continue
            s = 1.0 + k * self.gamma + b
            f = a * poch(1.0 + k * self.gamma, b) * (2 * L) ** (-s)
            out += f * ((-1) ** b * zeta(s, 1.0 + y / (2 * L)) + zeta(s, 1.0 - y / (2 * L)))
        return out

    def images(self, y, L, b=0):
        return _on_coarse(lambda ys: self._images(ys, L, b), y, L)

    def outside_mass(self, L):
        terms, _ = self._terms(L)
        return float(sum(2 * a * L ** (-k * self.gamma) / (k * self.gamma) for k, a in terms))

    def error(self, L, alias_mass):
        _, keep = self._terms(L)
        k = keep + 1
        a = self._coeffs[keep]
        return abs(2 * a * L ** (-k * self.gamma) / (k * self.gamma))


class MeasureTail:
    """First-order tail ``p_t(y) ~ t nu(y)`` for polar models in d=1.

    The first ``DIRECT`` images on each side are summed exactly; the rest
    by the midpoint rule, ``sum_{m > M} f(y + 2Lm) ~ (2L)^-1 int_{y+2L(M+1/2)}^inf f``,
    whose relative error is about ``1 / (24 (2M+1)^2)``.
    """

    DIRECT = 16

    def __init__(self, model: Polar, t: float, r: float = INF):
        self.t = t
        self.r = r
        self.pieces = model.pieces
        dirs, w = model.spectral.as_atoms()
        self.w_plus = float(w[dirs[:, 0] > 0].sum())
        self.w_minus = float(w[dirs[:, 0] < 0].sum())
        self.support = min(r, max(pc.hi for pc in self.pieces))

    def _q(self, s):
        out = sum(pc.density(s) for pc in self.pieces)
        return np.where(s <= self.r, out, 0.0)

    def _upper(self, a):
        """int_a^support Q(s) ds."""
        return moment(self.pieces, 0, a, self.support) if a < self.support else 0.0

    def _images0(self, y, L):
        t, M = self.t, self.DIRECT
        out = np.zeros_like(y)
        for m in range(1, M + 1):
            if 2 * L * m - L >= self.support:
                return out
            out += t * (self.w_plus * self._q(y + 2 * L * m) + self.w_minus * self._q(2 * L * m - y))
        c = 2 * L * (M + 0.5)
        if c - L >= self.support:
            return out
        a = np.linspace(c - L, c + L, 65)
        up = CubicSpline(a, [self._upper(x) for x in a])
        out += t / (2 * L) * (self.w_plus * up(c + y) + self.w_minus * up(c - y))
        return out

    def _images(self, y, L, b):
        if b == 0:
            return self._images0(y, L)
        # images vary on the scale L, so wide finite differences are accurate
        h = L / 64
        stencils = {1: ([-2, -1, 1, 2], [1 / 12, -2 / 3, 2 / 3, -1 / 12]),
                    2: ([-2, -1, 0, 1, 2], [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
                    3: ([-2, -1, 1, 2], [-1 / 2, 1, -1, 1 / 2]),
                    4: ([-2, -1, 0, 1, 2], [1, -4, 6, -4, 1])}
        offs, ws = stencils[b]
        return sum(wt * self._images0(y + o * h, L) for o, wt in zip(offs, ws)) / h ** b

    def images(self, y, L, b=0):
        return _on_coarse(lambda ys: self._images(ys, L, b), y, L)

    def tail_mass(self, L):
        return self.t * (self.w_plus + self.w_minus) * self._upper(L)

    def outside_mass(self, L):
        return self.tail_mass(L)

    def error(self, L, alias_mass):
        # the relative second-order correction is of the size of t nu(|y| > L)
        return abs(alias_mass) * min(1.0, 2.0 * self.tail_mass(L))


def _stable_constant(alpha):
    if alpha == 1.0:
        return math.pi / 2
    return math.gamma(1 - alpha) * math.cos(math.pi * alpha / 2) / alpha


def tail_model(source, t: float):
    """The tail used for dealiasing, or None when the tail is negligible."""
    model = base_model(source)
    if model.dim != 1:
        return None
    if isinstance(model, ExplicitSymbol):
        if model.kind == "power" and model.alpha < 2:
            return SeriesTail(model.scale, model.alpha, t)
        return None
    if isinstance(model, SubordinateBM):
        g = model.bernstein.alpha + model.bernstein.beta
        return SeriesTail(1.0, g, t) if g < 2 else None
    r = source.r if isinstance(source, Truncation) else INF
    if r == INF and isinstance(model.radial, Stable) and model.is_symmetric:
        c = model.spectral.total_mass * _stable_constant(model.radial.alpha)
        return SeriesTail(c, model.radial.alpha, t)
    return MeasureTail(model, t, r)


# ------------------------------------------------------------- lattices


def _frequency_lattice(grid: GridSpec) -> np.ndarray:
    k = grid.freqs()
    if grid.dim == 1:
        return k
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return np.stack([k1, k2], axis=-1)


def _beta_tuple(beta, dim) -> tuple:
    if np.isscalar(beta):
        b = [0] * dim
        b[0] = int(beta)
        beta = tuple(b)
    beta = tuple(int(b) for b in beta)
    if len(beta) != dim or any(b < 0 for b in beta) or sum(beta) > 4:
        raise InvalidModel(f"derivative multi-index {beta} must have length {dim} and order <= 4")
    return beta


def _check_hw(source, t: float) -> None:
    """Absolute-continuity diagnostic: t * liminf Re Phi / log(1+|xi|) > d."""
    model = base_model(source)
    rep = hw_index(source, [HW_PROBE])
    if rep.infinite_suspected:
        return
    level = t * rep.ratios[0]
    if level <= model.dim:
        raise HWViolated(
            f"t * Re Phi / log(1+|xi|) = {level:.4g} <= d = {model.dim} at |xi| = {HW_PROBE:g}",
            level=level, t=t)


def natural_width(source, t: float) -> float:
    """``1 / phi^{-1}(1/t)`` from the full model's profile."""
    prof = phi_profile(base_model(source))
    return 1.0 / phi_inverse(prof, 1.0 / t)


def auto_grid(source, t: float, N: int | None = None, L: float | None = None) -> GridSpec:
    """Grid with ``L = 40 / phi^{-1}(1/t)`` and ``N`` doubled until ``t Re Phi(Xi) > 27``."""
    model = base_model(source)
    d = model.dim
    if L is None:
        try:
            L = WIDTHS * natural_width(source, t)
        except OutOfRange as exc:
            raise GridUnderresolved(f"no natural width at t={t}: {exc}") from exc
    if N is None:
        N = DEFAULT_N[d]
        while N < MAX_N[d] and t * min_re_symbol(source, math.pi * N / (2 * L))[0] <= EDGE_DECAY:
            N *= 2
    return GridSpec(d, N, L)


def density(source, t: float, grid: GridSpec | None = None, beta=0, dealias: bool = True) -> DensityGrid:
    """Density (``beta = 0``) or derivative ``d^beta p_t`` on a lattice.

    ``source`` is a model or a :class:`Truncation`.  With ``grid=None`` the
    grid is sized automatically and ``L`` is doubled (at most three times)
    while the estimated dealiasing error exceeds 1e-4.
    """
    if not t > 0:
        raise InvalidModel("t must be positive")
    model = base_model(source)
    _check_hw(source, t)
    auto = grid is None
    if auto:
        grid = auto_grid(source, t)
    if grid.dim != model.dim:
        raise InvalidModel(f"grid dimension {grid.dim} differs from model dimension {model.dim}")
    beta = _beta_tuple(beta, grid.dim)
    doublings = 0
    while True:
        dg = _invert(source, t, grid, beta, dealias)
        err = dg.diagnostics["alias_error"]
        if not (auto and err > ALIAS_TOL and doublings < 3 and grid.N * 2 <= MAX_N[grid.dim]):
            break
        grid = GridSpec(grid.dim, grid.N * 2, grid.L * 2)
        doublings += 1
    dg.diagnostics["L_doublings"] = doublings
    edge = dg.diagnostics["edge_amplitude"]
    if edge > 1e-3:
        raise GridUnderresolved(f"exp(-t Re Phi(Xi)) = {edge:.3g} at the cut-off; increase N",
                                edge_amplitude=edge)
    if edge > 1e-12:
        warnings.warn(f"cut-off amplitude {edge:.3g} exceeds 1e-12", GridUnderresolvedWarning, stacklevel=2)
    if sum(beta) == 0:
        mass = dg.diagnostics["mass"]
        if abs(mass - 1.0) > 1e-3:
            raise GridUnderresolved(f"lattice mass {mass:.6f} deviates from 1 by more than 1e-3", mass=mass)
    if dg.diagnostics["alias_error"] > ALIAS_TOL:
        warnings.warn(f"estimated dealiasing error {dg.diagnostics['alias_error']:.3g} exceeds {ALIAS_TOL}",
                      GridUnderresolvedWarning, stacklevel=2)
    return dg


def _invert(source, t, grid: GridSpec, beta: tuple, dealias: bool) -> DensityGrid:
    model = base_model(source)
    xi = _frequency_lattice(grid)
    phi = symbol_values(source, xi)
    expo = -t * phi
    F = np.where(expo.real > -745.0, np.exp(np.maximum(expo.real, -745.0) + 1j * expo.imag), 0.0)
    if any(beta):
        if grid.dim == 1:
            F = F * (-1j * xi) ** beta[0]
        else:
            F = F * (-1j * xi[..., 0]) ** beta[0] * (-1j * xi[..., 1]) ** beta[1]
    k = np.fft.fftfreq(grid.N, d=1.0 / grid.N).astype(np.int64)
    sign = 1.0 - 2.0 * (k % 2)
    if grid.dim == 1:
        raw = np.fft.fft(F * sign)
    else:
        raw = np.fft.fft2(F * np.outer(sign, sign))
    raw *= (grid.dxi / (2 * np.pi)) ** grid.dim
    values = raw.real.copy()
    imag_residual = float(np.abs(raw.imag).max())
    edge = float(np.exp(-t * min_re_symbol(source, grid.xi_max)[0]))
    alias_mass = 0.0
    alias_error = 0.0
    tail_mass = 0.0
    tail = tail_model(source, t) if dealias else None
    y = grid.axis()
    if tail is not None:
        images = tail.images(y, grid.L, beta[0])
        values -= images
        if beta[0] == 0:
            alias_mass = float(images.sum() * grid.dy)
            tail_mass = tail.outside_mass(grid.L)
            alias_error = float(tail.error(grid.L, alias_mass))
    window_mass = float(values.sum() * grid.dy ** grid.dim) if not any(beta) else float("nan")
    diagnostics = {
        "mass": window_mass + tail_mass,
        "window_mass": window_mass,
        "tail_mass": tail_mass,
        "alias_mass": alias_mass,
        "alias_error": alias_error,
        "imag_residual": imag_residual,
        "edge_amplitude": edge,
    }
    meta = {
        "model": type(model).__name__,
        "truncation": source.r if isinstance(source, Truncation) else "full",
        "beta": beta,
    }
    return DensityGrid(grid, float(t), values, meta, diagnostics)


def rescaled_density(model, t: float, profile: PhiProfile, grid: GridSpec | None = None) -> DensityGrid:
    """``g_t(y) = h^d p_t^{h}(h y)`` with ``h = h(t)``.

    ``grid`` is given in rescaled units; the physical half-extent is
    ``h * grid.L``.  Models without an explicit Levy measure cannot be
    truncated and use the full exponent.
    """
    h = h_of_t(profile, t)
    source = Truncation(model, h) if isinstance(model, Polar) else model
    if grid is None:
        phys = auto_grid(source, t)
        grid = GridSpec(phys.dim, phys.N, phys.L / h)
    phys = GridSpec(grid.dim, grid.N, grid.L * h)
    dg = density(source, t, phys)
    meta = dict(dg.meta, h=h, rescaled=True)
    return DensityGrid(grid, dg.t, dg.values * h ** grid.dim, meta, dict(dg.diagnostics))
