"""Levy model specifications.

Three kinds of model are supported:

* :class:`Polar` -- a Levy measure in polar form, a finite spectral measure
  on the unit sphere times a radial jump density from one of six families;
* :class:`SubordinateBM` -- Brownian motion subordinated by the Bernstein
  function ``f(l) = l**(a/2) * log(1+l)**(b/2)``, symbol ``f(|xi|^2)``;
* :class:`ExplicitSymbol` -- a closed-form symbol (``scale*|xi|**alpha`` or
  a symmetric compound Poisson symbol).

:class:`Truncation` wraps a polar model and selects the fully compensated
small-jump exponent ``Phi_r``.

All types are frozen dataclasses, hashable, and safe to share.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InvalidModel
from .radial import INF, Piece, moment


# ---------------------------------------------------------------- spectral


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite measure on the unit sphere: discrete atoms or uniform."""

    dim: int
    atoms: tuple = ()
    uniform: float | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidModel(f"dimension must be 1 or 2, got {self.dim}")
        if self.uniform is not None:
            if self.atoms:
                raise InvalidModel("spectral measure is either atomic or uniform, not both")
            if not self.uniform > 0:
                raise InvalidModel("uniform spectral mass must be positive")
            return
        if not self.atoms:
            raise InvalidModel("spectral measure has no atoms")
        atoms = []
        for direction, weight in self.atoms:
            direction = tuple(float(c) for c in np.atleast_1d(direction))
            if len(direction) != self.dim:
                raise InvalidModel(f"atom direction {direction} is not in R^{self.dim}")
            if abs(math.hypot(*direction) - 1.0) > 1e-12:
                raise InvalidModel(f"atom direction {direction} is not a unit vector")
            if not weight > 0:
                raise InvalidModel(f"atom weight {weight} must be positive")
            atoms.append((direction, float(weight)))
        object.__setattr__(self, "atoms", tuple(atoms))
        dirs = np.array([a[0] for a in atoms])
        if np.linalg.svd(dirs, compute_uv=False).min() <= 1e-9 or len(atoms) < self.dim:
            raise InvalidModel("spectral atoms lie in a proper linear subspace")

    @classmethod
    def symmetric(cls, dim: int = 1, weight: float = 1.0) -> "SpectralMeasure":
        """Atoms of equal weight on +-e_k for every axis k."""
        atoms = []
        for k in range(dim):
            e = [0.0] * dim
            e[k] = 1.0
            atoms.append((tuple(e), weight))
            e = [0.0] * dim
            e[k] = -1.0
            atoms.append((tuple(e), weight))
        return cls(dim, tuple(atoms))

    @property
    def directions(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms], dtype=float).reshape(-1, self.dim)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms], dtype=float)

    @property
    def total_mass(self) -> float:
        if self.uniform is not None:
            return self.uniform
        return float(self.weights.sum())

    @property
    def is_symmetric(self) -> bool:
        if self.uniform is not None:
            return True
        dirs, w = self.directions, self.weights
        for d, wt in zip(dirs, w):
            match = np.all(np.abs(dirs + d) < 1e-12, axis=1)
            if not np.any(match) or abs(w[match].sum() - wt) > 1e-12 * wt:
                return False
        return True

    def as_atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Directions and weights; the uniform measure on S^0 is two atoms."""
        if self.uniform is not None:
            if self.dim == 1:
                return np.array([[1.0], [-1.0]]), np.array([self.uniform / 2] * 2)
            raise InvalidModel("uniform measure in d=2 has no atomic form")
        return self.directions, self.weights


# ------------------------------------------------------------ radial families


def _exp_decay(s, c):
    return math.exp(-c * s)


def _exp_decay_array(s, c):
    return np.exp(-c * s)


def _relativistic(s, k):
    return (1.0 + s) ** k * math.exp(-s)


def _relativistic_array(s, k):
    return (1.0 + s) ** k * np.exp(-s)


def _lamperti(s, f, alpha):
    if s == 0.0:
        return 1.0
    # log(s / (e^s - 1)) without overflow
    if s < 30:
        log_ratio = math.log(s / math.expm1(s))
    else:
        log_ratio = math.log(s) - s - math.log1p(-math.exp(-s))
    return math.exp(f * s + (1.0 + alpha) * log_ratio)


def _lamperti_array(s, f, alpha):
    s = np.asarray(s, dtype=float)
    safe = np.where(s > 0, s, 1.0)
    log_ratio = np.where(safe < 30, np.log(safe / np.expm1(np.minimum(safe, 30.0))),
                         np.log(safe) - safe - np.log1p(-np.exp(-safe)))
    return np.where(s > 0, np.exp(f * s + (1.0 + alpha) * log_ratio), 1.0)


def _check_alpha(alpha):
    if not 0.0 < alpha < 2.0:
        raise InvalidModel(f"alpha must lie in (0, 2), got {alpha}")


@dataclass(frozen=True)
class Stable:
    alpha: float
    name = "stable"

    def __post_init__(self):
        _check_alpha(self.alpha)

    def pieces(self, dim: int = 1):
        return (Piece(0.0, INF, self.alpha),)

    def tail(self):
        return ("power", self.alpha, 0.0)


@dataclass(frozen=True)
class Layered:
    alpha: float
    beta: float
    r0: float = 1.0
    name = "layered"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.beta > 0:
            raise InvalidModel(f"layered beta must lie in (0, inf], got {self.beta}")
        if not self.r0 > 0:
            raise InvalidModel("layered r0 must be positive")

    def pieces(self, dim: int = 1):
        if self.beta == INF:
            return (Piece(0.0, self.r0, self.alpha),)
        return (Piece(0.0, self.r0, self.alpha), Piece(self.r0, INF, self.beta))

    def tail(self):
        if self.beta == INF:
            return ("compact", None, self.r0)
        return ("power", self.beta, self.r0)


@dataclass(frozen=True)
class Tempered:
    alpha: float
    c: float = 1.0
    name = "tempered"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.c > 0:
            raise InvalidModel("tempering rate c must be positive")

    def pieces(self, dim: int = 1):
        g = functools.partial(_exp_decay, c=self.c)
        ga = functools.partial(_exp_decay_array, c=self.c)
        return (Piece(0.0, INF, self.alpha, g, 1.0 / self.c, ga),)

    def tail(self):
        return ("light", None, 0.0)


@dataclass(frozen=True)
class Relativistic:
    alpha: float
    name = "relativistic"

    def __post_init__(self):
        _check_alpha(self.alpha)

    def pieces(self, dim: int = 1):
        k = (dim + self.alpha - 1.0) / 2.0
        g = functools.partial(_relativistic, k=k)
        ga = functools.partial(_relativistic_array, k=k)
        return (Piece(0.0, INF, self.alpha, g, 1.0, ga),)

    def tail(self):
        return ("light", None, 0.0)


@dataclass(frozen=True)
class Lamperti:
    """Lamperti-stable radial density; only a constant directional f."""

    alpha: float
    f: float = 0.0
    name = "lamperti"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.f < 1.0 + self.alpha:
            raise InvalidModel("Lamperti f must satisfy sup f < 1 + alpha")

    def pieces(self, dim: int = 1):
        g = functools.partial(_lamperti, f=self.f, alpha=self.alpha)
        ga = functools.partial(_lamperti_array, f=self.f, alpha=self.alpha)
        return (Piece(0.0, INF, self.alpha, g, 1.0 / (1.0 + self.alpha - self.f), ga),)

    def tail(self):
        return ("light", None, 0.0)


@dataclass(frozen=True)
class Truncated:
    alpha: float
    r0: float = 1.0
    name = "truncated"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.r0 > 0:
            raise InvalidModel("truncation radius r0 must be positive")

    def pieces(self, dim: int = 1):
        return (Piece(0.0, self.r0, self.alpha),)

    def tail(self):
        return ("compact", None, self.r0)


RadialProfile = Union[Stable, Layered, Tempered, Relativistic, Lamperti, Truncated]
FAMILIES = {cls.name: cls for cls in (Stable, Layered, Tempered, Relativistic, Lamperti, Truncated)}


def radial_density(radial: RadialProfile, s, dim: int = 1):
    """Q(s) evaluated on an array."""
    s = np.asarray(s, dtype=float)
    return sum(pc.density(s) for pc in radial.pieces(dim))


# ----------------------------------------------------------------- bernstein


@dataclass(frozen=True)
class BernsteinSpec:
    """f(l) = l**(alpha/2) * log(1+l)**(beta/2), alpha in (0,2), beta in (-alpha, 2-alpha].

    The endpoint beta = 2 - alpha is admitted: f is then a geometric mean
    of the complete Bernstein functions l and log(1+l), hence still
    Bernstein, with f(l) ~ l at the origin.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not -self.alpha < self.beta <= 2.0 - self.alpha:
            raise InvalidModel(f"beta must lie in (-alpha, 2-alpha], got {self.beta}")
        lam = np.logspace(-8, 8, 321)
        if np.any(np.diff(self.f(lam)) <= 0):
            raise InvalidModel("Bernstein function is not strictly increasing on the check grid")

    def f(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam ** (self.alpha / 2) * np.log1p(lam) ** (self.beta / 2)

    def radial(self, r):
        """The symbol as a function of |xi|: f(|xi|^2)."""
        r = np.asarray(r, dtype=float)
        return self.f(r * r)


# -------------------------------------------------------------------- models


@dataclass(frozen=True)
class Polar:
    spectral: SpectralMeasure
    radial: RadialProfile
    center: bool = True

    def __post_init__(self):
        if not isinstance(self.spectral, SpectralMeasure):
            raise InvalidModel("spectral must be a SpectralMeasure")
        if type(self.radial).__name__ not in {c.__name__ for c in FAMILIES.values()}:
            raise InvalidModel(f"unknown radial family {self.radial!r}")
        try:
            small = moment(self.pieces, 2, 0.0, 1.0)
            big = moment(self.pieces, 0, 1.0, INF)
        except Exception as exc:  # pragma: no cover - defensive
            raise InvalidModel(f"int (1 ^ s^2) Q ds is not finite: {exc}") from exc
        if not (np.isfinite(small) and np.isfinite(big)):
            raise InvalidModel("int (1 ^ s^2) Q ds is not finite")

    @property
    def dim(self) -> int:
        return self.spectral.dim

    @property
    def pieces(self):
        return self.radial.pieces(self.dim)

    @property
    def is_symmetric(self) -> bool:
        return self.spectral.is_symmetric


@dataclass(frozen=True)
class SubordinateBM:
    bernstein: BernsteinSpec
    dim: int = 1
    center: bool = True

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidModel("dimension must be 1 or 2")

    is_symmetric = True


@dataclass(frozen=True)
class ExplicitSymbol:
    """Closed-form symbol.

    ``kind="power"``: ``scale * |xi|**alpha`` with alpha in (0, 2].
    ``kind="compound_poisson"``: ``rate * (1 - cos xi_1)``, jumps of size one
    along the first axis.
    """

    kind: str
    alpha: float = 1.0
    scale: float = 1.0
    rate: float = 1.0
    dim: int = 1
    center: bool = True

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidModel("dimension must be 1 or 2")
        if self.kind == "power":
            if not 0.0 < self.alpha <= 2.0:
                raise InvalidModel(f"power symbol needs alpha in (0, 2], got {self.alpha}")
            if not self.scale > 0:
                raise InvalidModel("power symbol scale must be positive")
        elif self.kind == "compound_poisson":
            if not self.rate > 0:
                raise InvalidModel("compound Poisson rate must be positive")
        else:
            raise InvalidModel(f"unknown explicit symbol kind {self.kind!r}")

    is_symmetric = True


LevyModel = Union[Polar, SubordinateBM, ExplicitSymbol]


@dataclass(frozen=True)
class Truncation:
    """The exponent Phi_r of jumps of size <= r, fully compensated."""

    model: Polar
    r: float

    def __post_init__(self):
        from .errors import NoLevyMeasure

        if not isinstance(self.model, Polar):
            raise NoLevyMeasure("truncation needs a model with an explicit Levy measure")
        if not self.r > 0:
            raise InvalidModel("truncation radius must be positive")

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def is_symmetric(self) -> bool:
        return self.model.is_symmetric


def base_model(source) -> LevyModel:
    return source.model if isinstance(source, Truncation) else source


# ---------------------------------------------------------------------- JSON

_FAMILY_KEYS = {
    "stable": ("alpha",),
    "layered": ("alpha", "beta", "r0"),
    "tempered": ("alpha", "c"),
    "relativistic": ("alpha",),
    "lamperti": ("alpha", "f"),
    "truncated": ("alpha", "r0"),
}


def _parse_spectral(spec, dim):
    if not isinstance(spec, dict):
        raise InvalidModel("spectral must be an object")
    unknown = set(spec) - {"atoms", "uniform"}
    if unknown:
        raise InvalidModel(f"unknown spectral keys: {sorted(unknown)}")
    if "uniform" in spec:
        if "atoms" in spec:
            raise InvalidModel("spectral has both atoms and uniform")
        return SpectralMeasure(dim, uniform=float(spec["uniform"]))
    atoms = []
    for entry in spec.get("atoms", []):
        if dim == 1:
            direction, weight = entry
            atoms.append(((float(direction),), float(weight)))
        elif len(entry) == 2 and isinstance(entry[0], (list, tuple)):
            atoms.append((tuple(map(float, entry[0])), float(entry[1])))
        elif len(entry) == 3:
            atoms.append(((float(entry[0]), float(entry[1])), float(entry[2])))
        else:
            raise InvalidModel(f"cannot parse atom {entry!r}")
    return SpectralMeasure(dim, tuple(atoms))


def model_from_dict(spec: dict) -> LevyModel:
    """Build a model from its JSON document; unknown keys are rejected."""
    if not isinstance(spec, dict):
        raise InvalidModel("model spec must be a JSON object")
    spec = dict(spec)
    spec.pop("name", None)
    dim = int(spec.pop("dim", 1))
    center = bool(spec.pop("center", True))
    if "subordinate_bm" in spec:
        sub = spec.pop("subordinate_bm")
        if spec:
            raise InvalidModel(f"unknown keys: {sorted(spec)}")
        unknown = set(sub) - {"alpha", "beta"}
        if unknown:
            raise InvalidModel(f"unknown subordinate_bm keys: {sorted(unknown)}")
        return SubordinateBM(BernsteinSpec(float(sub["alpha"]), float(sub.get("beta", 0.0))), dim, center)
    if "explicit" in spec:
        ex = dict(spec.pop("explicit"))
        if spec:
            raise InvalidModel(f"unknown keys: {sorted(spec)}")
        unknown = set(ex) - {"kind", "alpha", "scale", "rate"}
        if unknown:
            raise InvalidModel(f"unknown explicit keys: {sorted(unknown)}")
        kind = ex.pop("kind", "power")
        return ExplicitSymbol(kind, dim=dim, center=center, **{k: float(v) for k, v in ex.items()})
    family = spec.pop("family", None)
    if family not in _FAMILY_KEYS:
        raise InvalidModel(f"unknown family {family!r}; expected one of {sorted(_FAMILY_KEYS)}")
    if "spectral" not in spec:
        raise InvalidModel("polar model needs a 'spectral' entry")
    spectral = _parse_spectral(spec.pop("spectral"), dim)
    params = {}
    for key in _FAMILY_KEYS[family]:
        if key in spec:
            val = spec.pop(key)
            params[key] = INF if val is None or val in ("inf", "Infinity") else float(val)
    if spec:
        raise InvalidModel(f"unknown keys for family {family!r}: {sorted(spec)}")
    try:
        radial = FAMILIES[family](**params)
    except TypeError as exc:
        raise InvalidModel(str(exc)) from exc
    return Polar(spectral, radial, center)


def model_from_json(path) -> LevyModel:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidModel(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return model_from_dict(spec)


def model_to_dict(model) -> dict:
    if isinstance(model, Truncation):
        out = model_to_dict(model.model)
        out["truncation_r"] = model.r
        return out
    if isinstance(model, SubordinateBM):
        return {"dim": model.dim, "subordinate_bm": {"alpha": model.bernstein.alpha,
                                                     "beta": model.bernstein.beta}}
    if isinstance(model, ExplicitSymbol):
        ex = {"kind": model.kind}
        if model.kind == "power":
            ex.update(alpha=model.alpha, scale=model.scale)
        else:
            ex.update(rate=model.rate)
        return {"dim": model.dim, "explicit": ex}
    out = {"dim": model.dim, "family": model.radial.name}
    for key in _FAMILY_KEYS[model.radial.name]:
        val = getattr(model.radial, key)
        out[key] = "inf" if val == INF else val
    sp = model.spectral
    if sp.uniform is not None:
        out["spectral"] = {"uniform": sp.uniform}
    elif sp.dim == 1:
        out["spectral"] = {"atoms": [[d[0], w] for d, w in sp.atoms]}
    else:
        out["spectral"] = {"atoms": [[list(d), w] for d, w in sp.atoms]}
    if not model.center:
        out["center"] = False
    return out


CATALOG = [
    {"family": "stable", "params": {"alpha": "(0, 2)"},
     "Q": "s^(-1-alpha)"},
    {"family": "layered", "params": {"alpha": "(0, 2)", "beta": "(0, inf]", "r0": "> 0"},
     "Q": "s^(-1-alpha) on (0, r0], s^(-1-beta) on (r0, inf)"},
    {"family": "tempered", "params": {"alpha": "(0, 2)", "c": "> 0"},
     "Q": "s^(-1-alpha) exp(-c s)"},
    {"family": "relativistic", "params": {"alpha": "(0, 2)"},
     "Q": "s^(-1-alpha) (1+s)^((d+alpha-1)/2) exp(-s)"},
    {"family": "lamperti", "params": {"alpha": "(0, 2)", "f": "< 1 + alpha (constant)"},
     "Q": "s^(-1-alpha) exp(s f) s^(1+alpha) / (e^s - 1)^(1+alpha)"},
    {"family": "truncated", "params": {"alpha": "(0, 2)", "r0": "> 0"},
     "Q": "s^(-1-alpha) on (0, r0]"},
]
