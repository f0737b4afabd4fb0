"""Radial quadrature for polar Levy measures.

A radial jump density is a list of :class:`Piece` objects, each of the form
``s**(-1-gamma) * g(s)`` on ``(lo, hi]`` with ``g`` smooth and bounded near
the left end (``g=None`` means ``g == 1``).  Everything here works on one
direction: for ``u = <theta, xi> >= 0`` we compute

    K(u) = int_lo^hi (1 - exp(i s u) + i s u 1{s < comp}) Q(s) ds

The integral is split at ``s_c = 0.1/u``.  Below ``s_c`` the trigonometric
factors are replaced by their Taylor series (5 terms, truncation error
below 1e-16 relative) and integrated against moments of ``Q``; above
``s_c`` the non-oscillatory part is a moment and the oscillatory part is
done in the scaled variable ``v = s u`` with QUADPACK's Fourier rules.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DivergentMoment, QuadratureFailed

INF = math.inf
SERIES_TERMS = 5
SPLIT = 0.1
EPSREL = 1e-11
EPSABS = 0.0
U_MIN = 1e-290  # below this K(u) is returned as 0 (0.1/u would overflow)


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    gamma: float
    g: Callable[[float], float] | None = None
    scale: float = 1.0
    g_array: Callable[[np.ndarray], np.ndarray] | None = None  # vectorised twin of g

    def density(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s > self.lo) & (s <= self.hi)
        out = np.zeros_like(s)
        ss = s[inside]
        vals = ss ** (-1.0 - self.gamma)
        if self.g is not None:
            if self.g_array is not None:
                vals = vals * self.g_array(ss)
            else:
                vals = vals * np.vectorize(self.g, otypes=[float])(ss)
        out[inside] = vals
        return out


def _quad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=EPSABS, epsrel=EPSREL, limit=500, **kw)
        except integrate.IntegrationWarning:
            # fall back to a looser tolerance before giving up
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, epsabs=EPSABS, epsrel=1e-9, limit=1000, **kw)
            if not np.isfinite(val) or err > 1e-7 * max(abs(val), 1e-300) and err > 1e-14:
                raise QuadratureFailed(
                    f"quadrature on [{a}, {b}] did not converge",
                    value=val, error_estimate=err,
                )
    return val


def _positive_quad(f, x, y, scale):
    """int_x^y f for a smooth non-oscillatory f, 0 < x < y <= inf."""
    if x >= y:
        return 0.0
    total = 0.0
    # split long ranges geometrically so QUADPACK sees O(1) dynamic range
    edges = [x]
    cuts = [scale * 10.0 ** k for k in range(-30, 31)]
    for c in cuts:
        if x * 50 < c < y and c > edges[-1] * 50:
            edges.append(c)
    if y == INF:
        edges.append(INF)
    else:
        edges.append(y)
    for a, b in zip(edges[:-1], edges[1:]):
        if b == INF:
            total += _quad(f, a, INF)
        elif b / a > 20:
            # log substitution
            total += _quad(lambda w: f(math.exp(w)) * math.exp(w), math.log(a), math.log(b))
        else:
            total += _quad(f, a, b)
    return total


def piece_moment(piece: Piece, p: float, x: float, y: float) -> float:
    """int_x^y s**p Q(s) ds restricted to the piece."""
    a = max(x, piece.lo)
    b = min(y, piece.hi)
    if a >= b:
        return 0.0
    e = p - piece.gamma  # integrand is s**(e-1) * g(s)
    if piece.g is None:
        if b == INF:
            if e >= 0 or a == 0.0:
                raise DivergentMoment(f"int s^{p} Q diverges at infinity (tail exponent {piece.gamma})")
            return a ** e / (-e)
        if a == 0.0:
            if e <= 0:
                raise DivergentMoment(f"int s^{p} Q diverges at zero (exponent {piece.gamma})")
            return b ** e / e
        if e == 0:
            return math.log(b / a)
        return (b ** e - a ** e) / e
    g = piece.g
    if a == 0.0:
        if e <= 0:
            raise DivergentMoment(f"int s^{p} Q diverges at zero (exponent {piece.gamma})")
        head = min(b, piece.scale)
        total = _quad(g, 0.0, head, weight="alg", wvar=(e - 1.0, 0.0))
        if head < b:
            total += _positive_quad(lambda s: s ** (e - 1.0) * g(s), head, b, piece.scale)
        return total
    return _positive_quad(lambda s: s ** (e - 1.0) * g(s), a, b, piece.scale)


def moment(pieces, p: float, x: float = 0.0, y: float = INF) -> float:
    """int_x^y s**p Q(s) ds summed over pieces."""
    return sum(piece_moment(pc, p, x, y) for pc in pieces)


def scaled_moment(pieces, p: float, x: float, y: float, u: float) -> float:
    """``u**p * int_x^y s**p Q(s) ds``, safe for huge ``y`` and tiny ``u``."""
    total = 0.0
    lu = math.log(u)
    for pc in pieces:
        a = max(x, pc.lo)
        b = min(y, pc.hi)
        if a >= b:
            continue
        if pc.g is None:
            # u^gamma ((bu)^e - (au)^e) / e in logs
            e = p - pc.gamma
            if b == INF and e >= 0 or a == 0.0 and e <= 0:
                raise DivergentMoment(f"int s^{p} Q diverges (exponent {pc.gamma})")
            if e == 0:
                total += math.exp(pc.gamma * lu) * math.log(b / a)
                continue
            top = 0.0 if b == INF else math.exp(pc.gamma * lu + e * (math.log(b) + lu))
            bot = 0.0 if a == 0.0 else math.exp(pc.gamma * lu + e * (math.log(a) + lu))
            total += (top - bot) / e
            continue
        g = pc.g
        sp = Piece(a * u, b * u, pc.gamma, lambda v, g=g: g(v / u), pc.scale * u)
        m = piece_moment(sp, p, a * u, b * u)
        if m:
            total += u ** pc.gamma * m
    return total


TAIL_START = 400.0


def _panels(amp, x0: float, x1: float, kind: str) -> float:
    """QAWO over panels growing by 100x, which keeps each call well conditioned."""
    val = 0.0
    while x0 < x1:
        nxt = min(x0 * 100.0, x1)
        val += _quad(amp, x0, nxt, weight=kind, wvar=1.0)
        x0 = nxt
    return val


def _power_tail(gam: float, X: float, kind: str) -> float:
    """int_X^inf v^(-1-gam) {cos,sin}(v) dv from I = i e^(iX) sum_k (-i)^k (1+gam)_k X^(-1-gam-k)."""
    total = 0j
    c = X ** (-1.0 - gam)
    k = 0
    while True:
        term = (-1j) ** k * c
        total += term
        c_next = c * (1.0 + gam + k) / X
        if c_next < 1e-17 * abs(total) or c_next > c or k > 200:
            break
        c = c_next
        k += 1
    res = 1j * complex(math.cos(X), math.sin(X)) * total
    return res.real if kind == "cos" else res.imag


def _fourier_tail(amp, x0: float, kind: str) -> float:
    """QAWF on [x0, inf) for amplitudes that decay exponentially."""
    # QAWF honours only epsabs: scale it to the size of the integral, about amp(x0) min(x0, 1)
    tol = max(1e-12 * amp(x0) * min(x0, 1.0), 1e-300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(amp, x0, INF, weight=kind, wvar=1.0, epsabs=tol, limlst=400)
    if not np.isfinite(val):
        raise QuadratureFailed("oscillatory tail quadrature failed", value=val, error_estimate=err)
    return val


def _oscillatory(pieces, u: float, x: float, y: float, kind: str) -> float:
    """int_x^y {cos,sin}(s u) Q(s) ds with x > 0, in the variable v = s u."""
    total = 0.0
    for pc in pieces:
        a = max(x, pc.lo)
        b = min(y, pc.hi)
        if a >= b:
            continue
        gam = pc.gamma
        if pc.g is None:
            amp = lambda v, gam=gam: v ** (-1.0 - gam)
        else:
            g = pc.g
            amp = lambda v, gam=gam, g=g: v ** (-1.0 - gam) * g(v / u)
        x0 = a * u
        if b == INF and pc.g is None:
            # finite panels to X, then the exact asymptotic series of the power tail
            top = max(x0, TAIL_START)
            val = _panels(amp, x0, top, kind) + _power_tail(gam, top, kind)
        elif b == INF:
            val = _fourier_tail(amp, x0, kind)
        else:
            val = _panels(amp, x0, b * u, kind)
        total += u ** gam * val
    return total


def radial_exponent(pieces, u: float, lo: float = 0.0, hi: float = INF,
                    comp: float = 1.0, want_im: bool = True) -> complex:
    """K(u) for a single direction; ``u`` may be negative (K(-u) = conj K(u))."""
    if abs(u) < U_MIN:
        return 0j
    neg = u < 0
    u = abs(u)
    sc = SPLIT / u
    re = 0.0
    im = 0.0
    # region A: (lo, min(hi, sc)]
    a_hi = min(hi, sc)
    if lo < a_hi:
        for k in range(1, SERIES_TERMS + 1):
            re += (-1) ** (k + 1) / math.factorial(2 * k) * scaled_moment(pieces, 2 * k, lo, a_hi, u)
        if want_im:
            if comp < a_hi:
                im -= scaled_moment(pieces, 1, max(lo, comp), a_hi, u)
            for k in range(1, SERIES_TERMS + 1):
                im += (-1) ** (k + 1) / math.factorial(2 * k + 1) * scaled_moment(
                    pieces, 2 * k + 1, lo, a_hi, u)
    # region B: (max(lo, sc), hi]
    b_lo = max(lo, sc)
    if b_lo < hi:
        re += moment(pieces, 0, b_lo, hi) - _oscillatory(pieces, u, b_lo, hi, "cos")
        if want_im:
            if b_lo < comp:
                im += u * moment(pieces, 1, b_lo, min(hi, comp))
            im -= _oscillatory(pieces, u, b_lo, hi, "sin")
    return complex(re, -im if neg else im)
