"""The scale function phi(rho) = sup_{|eta| <= rho} Re Phi(eta), its inverse and h(t)."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateProfile, InvalidModel, OutOfRange
from .models import ExplicitSymbol, Polar, SubordinateBM, base_model
from .symbol import _directions, symbol_values


@dataclass(frozen=True, eq=False)
class PhiProfile:
    """Tabulated running maximum of ``Re Phi`` over sampled directions.

    ``radial`` marks models whose real part depends on ``|xi|`` only; for
    those :func:`phi_inverse` polishes the table inverse against the symbol.
    """

    rho_grid: np.ndarray
    phi_values: np.ndarray
    direction_set: np.ndarray
    source: object = field(default=None, repr=False)
    radial: bool = False

    def __post_init__(self):
        rho = np.asarray(self.rho_grid, dtype=float)
        phi = np.asarray(self.phi_values, dtype=float)
        if rho.ndim != 1 or len(rho) != len(phi) or np.any(np.diff(rho) <= 0) or rho[0] <= 0:
            raise InvalidModel("rho_grid must be positive and strictly increasing")
        if np.any(np.diff(phi) < 0) or phi[0] < 0:
            raise InvalidModel("phi_values must be nonnegative and nondecreasing")
        object.__setattr__(self, "rho_grid", rho)
        object.__setattr__(self, "phi_values", phi)

    @property
    def range(self) -> tuple[float, float]:
        pos = self.phi_values[self.phi_values > 0]
        return float(pos[0]), float(self.phi_values[-1])

    def phi(self, rho):
        """Log-log interpolant of the table; power-law extrapolation below the grid."""
        rho = np.asarray(rho, dtype=float)
        keep = self.phi_values > 0
        lr, lp = np.log(self.rho_grid[keep]), np.log(self.phi_values[keep])
        x = np.log(np.maximum(rho, 1e-300))
        out = np.exp(np.interp(x, lr, lp))
        below = x < lr[0]
        if np.any(below) and len(lr) > 1:
            slope = (lp[1] - lp[0]) / (lr[1] - lr[0])
            out = np.where(below, np.exp(lp[0] + slope * (x - lr[0])), out)
        out = np.where(rho <= 0, 0.0, out)
        return float(out) if out.ndim == 0 else out


def _is_radial(model) -> bool:
    if isinstance(model, SubordinateBM):
        return True
    if isinstance(model, ExplicitSymbol):
        return model.kind == "power" or model.dim == 1
    if model.dim == 1:
        return True
    return model.spectral.uniform is not None


@functools.lru_cache(maxsize=128)
def phi_profile(source, rho_min: float = 1e-10, rho_max: float = 1e12,
                n_points: int = 400, n_directions: int = 64) -> PhiProfile:
    """Tabulate phi on a log grid.

    In d=1 the real part is even, so one direction suffices; in d=2
    ``n_directions`` equally spaced directions on a half circle are used.
    """
    if not 0 < rho_min < rho_max:
        raise InvalidModel("need 0 < rho_min < rho_max")
    if n_points < 16:
        raise InvalidModel("phi profile needs at least 16 points")
    model = base_model(source)
    rho = np.logspace(math.log10(rho_min), math.log10(rho_max), n_points)
    dirs = _directions(model.dim, n_directions)
    pts = rho[:, None, None] * dirs[None, :, :]
    vals = symbol_values(source, pts.reshape(-1, model.dim)).real.reshape(len(rho), len(dirs))
    phi = np.maximum.accumulate(np.maximum(vals.max(axis=1), 0.0))
    if phi[-1] <= 0:
        raise DegenerateProfile("Re Phi vanishes on the whole grid", rho_max=rho_max)
    return PhiProfile(rho, phi, dirs, source, _is_radial(model))


def _re_on_axis(source, rho: float) -> float:
    model = base_model(source)
    e1 = np.zeros(model.dim)
    e1[0] = rho
    return float(symbol_values(source, e1[None, :]).real[0])


def phi_inverse(profile: PhiProfile, s: float, refine: bool = True) -> float:
    """Generalised inverse ``inf{rho : phi(rho) >= s}`` of the tabulated profile."""
    lo, hi = profile.range
    if not (lo <= s <= hi):
        raise OutOfRange(f"s={s} outside the tabulated range [{lo:.6g}, {hi:.6g}]", admissible=(lo, hi))
    phi = profile.phi_values
    keep = phi > 0
    vals, first = np.unique(phi[keep], return_index=True)
    rhos = profile.rho_grid[keep][first]
    lv, lr = np.log(vals), np.log(rhos)
    x = math.log(s)
    i = int(np.searchsorted(lv, x))
    if i < len(lv) and lv[i] == x:
        return float(rhos[i])
    rho = float(np.exp(np.interp(x, lv, lr)))
    if not (refine and profile.radial and profile.source is not None):
        return rho
    a, b = float(rhos[max(i - 1, 0)]), float(rhos[min(i, len(rhos) - 1)])
    fa = _re_on_axis(profile.source, a) - s
    fb = _re_on_axis(profile.source, b) - s
    if fa < 0 < fb:
        rho = brentq(lambda r: _re_on_axis(profile.source, r) - s, a, b, xtol=1e-14 * b, rtol=1e-13)
    return float(rho)


def h_of_t(profile: PhiProfile, t):
    """``h(t) = 1 / phi^{-1}(1/t)``; vectorised over ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise OutOfRange("t must be positive")
    out = np.array([1.0 / phi_inverse(profile, 1.0 / tt) for tt in t_arr.ravel()]).reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out
