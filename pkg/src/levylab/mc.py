"""Monte Carlo oracle: compound-Poisson big jumps plus a Gaussian small-jump surrogate."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .density import DensityGrid
from .errors import InsufficientSamples, InvalidModel, NoLevyMeasure, RateOverflow
from .radial import INF, moment
from .models import Polar, Truncation, base_model, model_to_dict
from .symbol import drift

BLOCK = 4096
MAX_RATE = 1e8
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
TABLE_POINTS = 4000


@dataclass(frozen=True)
class SamplerConfig:
    epsilon: float = 1e-3
    n_paths: int = 100_000
    t: float = 1.0
    seed: int = 0
    small_jump_mode: str = "gaussian-surrogate"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidModel("epsilon must be positive")
        if self.n_paths < 1000:
            raise InvalidModel("n_paths must be at least 1000")
        if not self.t > 0:
            raise InvalidModel("t must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidModel("seed must be an unsigned 64-bit integer")
        if self.small_jump_mode not in ("gaussian-surrogate", "drop"):
            raise InvalidModel(f"unknown small_jump_mode {self.small_jump_mode!r}")


@dataclass(frozen=True)
class EmpiricalDist:
    samples: np.ndarray  # shape (n_paths, d)
    t: float
    model_id: str
    config: SamplerConfig

    def shifted(self, delta) -> "EmpiricalDist":
        delta = np.broadcast_to(np.asarray(delta, dtype=float), (self.samples.shape[1],))
        return EmpiricalDist(self.samples + delta, self.t, self.model_id, self.config)

    def save(self, path) -> Path:
        """Column-major float64 binary plus a JSON sidecar."""
        path = Path(path)
        np.asfortranarray(self.samples).T.astype("<f8").tofile(path)
        side = {"n_paths": self.samples.shape[0], "dim": self.samples.shape[1], "t": self.t,
                "model": self.model_id, "config": asdict(self.config)}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))
        return path


# ------------------------------------------------------------ radial jump law


class _RadialLaw:
    """Inverse CDF of ``Q`` restricted to ``(eps, hi]``.

    The tail function ``T(s) = int_s^hi Q`` is tabulated on a log grid and
    inverted in log-log coordinates; beyond the table a pure power tail is
    inverted exactly.
    """

    def __init__(self, pieces, eps: float, hi: float, tail):
        self.eps, self.hi = eps, hi
        self.total = moment(pieces, 0, eps, hi)
        single = len(pieces) == 1 and pieces[0].g is None
        self.power = pieces[0].gamma if single else None
        if self.power is not None or self.total == 0:
            return
        top = hi
        self.tail_gamma = None
        if hi == INF:
            kind, gam, r = tail
            top = max(1e3 * eps, 10.0 * max(r, 1.0))
            if kind == "power":
                self.tail_gamma = gam
                top = max(top, 10.0 * r)
            else:
                while moment(pieces, 0, top, INF) > 1e-16 * self.total:
                    top *= 4.0
        s = np.geomspace(eps, top, TABLE_POINTS)
        cells = np.array([moment(pieces, 0, a, b) for a, b in zip(s[:-1], s[1:])])
        tail_above = moment(pieces, 0, top, hi) if hi == INF else 0.0
        T = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]]) + tail_above
        self.top, self.T_top = top, tail_above
        keep = T > 0
        self.logT = np.log(T[keep])[::-1]
        self.logs = np.log(s[keep])[::-1]

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Radii for uniforms ``u`` in (0, 1]."""
        target = u * self.total
        if self.power is not None:
            a = self.power
            floor = 0.0 if self.hi == INF else self.hi ** (-a)
            return (a * target + floor) ** (-1.0 / a)
        out = np.exp(np.interp(np.log(target), self.logT, self.logs))
        if self.T_top > 0 and self.tail_gamma is not None:
            beyond = target < self.T_top
            out[beyond] = self.top * (target[beyond] / self.T_top) ** (-1.0 / self.tail_gamma)
        return out


def _setup(source, eps: float):
    model = base_model(source)
    if not isinstance(model, Polar):
        raise NoLevyMeasure(f"{type(model).__name__} has no Levy measure to sample")
    pieces = model.pieces
    hi = source.r if isinstance(source, Truncation) else INF
    eps_eff = min(eps, hi)
    law = _RadialLaw(pieces, eps_eff, hi, model.radial.tail())
    small_var = moment(pieces, 2, 0.0, eps_eff)
    # compensate every sampled jump when the density is centred, else below 1
    if isinstance(source, Truncation) or drift(model) is not None:
        comp_hi = hi
    else:
        comp_hi = max(1.0, eps_eff)
    comp = moment(pieces, 1, eps_eff, comp_hi) if not model.is_symmetric else 0.0
    return model, law, small_var, comp


def sample_increments(source, cfg: SamplerConfig) -> EmpiricalDist:
    """Sample ``X_t`` for a polar model (or a truncation of one)."""
    model, law, small_var, comp = _setup(source, cfg.epsilon)
    d = model.dim
    t = cfg.t
    uniform = model.spectral.uniform is not None and d == 2
    if uniform:
        rates = np.array([model.spectral.uniform])
        dirs = None
    else:
        dirs, rates = model.spectral.as_atoms()
    lam = t * rates * law.total
    lam_total = float(lam.sum())
    if lam_total > MAX_RATE:
        raise RateOverflow(f"Poisson mean {lam_total:.3g} exceeds {MAX_RATE:g}", rate=lam_total)
    if uniform:
        # isotropic: the covariance is spread evenly, no net drift
        cov = np.eye(2) * t * model.spectral.uniform * small_var / 2.0
        shift = np.zeros(2)
    else:
        cov = t * small_var * np.einsum("j,ja,jb->ab", rates, dirs, dirs)
        shift = t * comp * (rates[:, None] * dirs).sum(axis=0)
    use_gauss = cfg.small_jump_mode == "gaussian-surrogate" and small_var > 0
    chol = np.linalg.cholesky(cov + 1e-300 * np.eye(d)) if use_gauss else None
    probs = lam / lam_total if lam_total > 0 else None

    out = np.empty((cfg.n_paths, d))
    for block, start in enumerate(range(0, cfg.n_paths, BLOCK)):
        n = min(BLOCK, cfg.n_paths - start)
        rng = np.random.Generator(np.random.Philox(key=cfg.seed + (block << 64)))
        x = np.zeros((n, d))
        if lam_total > 0:
            counts = rng.poisson(lam_total, size=n)
            total = int(counts.sum())
            owner = np.repeat(np.arange(n), counts)
            radii = law.sample(1.0 - rng.random(total))
            if uniform:
                phase = rng.random()
                # low-discrepancy angles, dealt out in random order: consecutive
                # golden-ratio angles are anti-correlated and must not share a path
                ang = 2 * np.pi * ((phase + GOLDEN * rng.permutation(total)) % 1.0)
                jumps = radii[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            else:
                which = rng.choice(len(probs), size=total, p=probs) if len(probs) > 1 else np.zeros(total, int)
                jumps = radii[:, None] * dirs[which]
            for k in range(d):
                x[:, k] = np.bincount(owner, weights=jumps[:, k], minlength=n)
        if use_gauss:
            x += rng.standard_normal((n, d)) @ chol.T
        out[start:start + n] = x - shift
    try:
        model_id = json.dumps(model_to_dict(model), sort_keys=True)
    except Exception:
        model_id = repr(model)
    if isinstance(source, Truncation):
        model_id = f"truncated(r={source.r:g}):{model_id}"
    return EmpiricalDist(out, float(t), model_id, cfg)


# ---------------------------------------------------------------- statistics


def _cells(a: np.ndarray, b: np.ndarray, n_cells: int):
    """Regular partition of the pooled 1%-99% window; outliers go to the edge cells."""
    pooled = np.concatenate([a, b])
    lo, hi = np.quantile(pooled, [0.01, 0.99])
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, n_cells + 1)
    ia = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, n_cells - 1)
    ib = np.clip(np.searchsorted(edges, b, side="right") - 1, 0, n_cells - 1)
    return ia, ib


def empirical_tv_lower(a: EmpiricalDist, b: EmpiricalDist, n_cells: int = 64, norm: str = "tv") -> float:
    """Partition lower bound ``sum |#a - #b| / n`` (halved for ``norm="tv"``).

    In d=2 each axis gets ``round(sqrt(n_cells))`` cells.
    """
    if norm not in ("tv", "var"):
        raise InvalidModel(f"unknown norm {norm!r}")
    if a.t != b.t:
        raise InvalidModel("empirical laws at different times")
    if a.samples.shape != b.samples.shape:
        raise InvalidModel("empirical laws need equal sample counts and dimension")
    n, d = a.samples.shape
    per_axis = n_cells if d == 1 else max(1, int(round(math.sqrt(n_cells))))
    ka = np.zeros(n, dtype=np.int64)
    kb = np.zeros(n, dtype=np.int64)
    for k in range(d):
        ia, ib = _cells(a.samples[:, k], b.samples[:, k], per_axis)
        ka = ka * per_axis + ia
        kb = kb * per_axis + ib
    total = per_axis ** d
    ca = np.bincount(ka, minlength=total)
    cb = np.bincount(kb, minlength=total)
    pooled = (ca + cb) / 2.0
    if pooled.min() < 5:
        raise InsufficientSamples(
            f"smallest cell expects {pooled.min():.1f} < 5 samples; use more paths or fewer cells",
            min_count=float(pooled.min()))
    l1 = float(np.abs(ca - cb).sum()) / n
    return l1 if norm == "var" else 0.5 * l1


@dataclass(frozen=True)
class KSResult:
    statistic: float
    threshold: float
    passed: bool


def lattice_cdf(dg: DensityGrid):
    """CDF of a d=1 density grid; the mass outside the window is split evenly."""
    if dg.grid.dim != 1 or any(dg.beta):
        raise InvalidModel("lattice_cdf needs a d=1 density grid")
    y = dg.y
    dy = dg.grid.dy
    mass_in = float(dg.values.sum() * dy)
    left = 0.5 * (1.0 - mass_in)
    # cell-centred cumulative sum: F at the right edge of each cell
    right_edges = y + 0.5 * dy
    F = left + np.cumsum(dg.values) * dy
    return right_edges, F, left


def ks_statistic(emp: EmpiricalDist, dg: DensityGrid, level: float = 0.01) -> KSResult:
    """Kolmogorov-Smirnov distance between samples and a lattice density."""
    if emp.samples.shape[1] != 1:
        raise InvalidModel("the KS check is one-dimensional")
    if abs(emp.t - dg.t) > 1e-12 * max(1.0, dg.t):
        raise InvalidModel("samples and density are at different times")
    x = np.sort(emp.samples[:, 0])
    n = len(x)
    edges, F, left = lattice_cdf(dg)
    Fx = np.interp(x, np.concatenate([[edges[0] - dg.grid.dy], edges]), np.concatenate([[left], F]),
                   left=np.nan, right=np.nan)
    inside = np.isfinite(Fx)
    i = np.arange(1, n + 1)
    d_plus = np.max(i[inside] / n - Fx[inside], initial=0.0)
    d_minus = np.max(Fx[inside] - (i[inside] - 1) / n, initial=0.0)
    stat = float(max(d_plus, d_minus))
    c = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}.get(level)
    if c is None:
        c = math.sqrt(-0.5 * math.log(level / 2))
    thr = c / math.sqrt(n)
    return KSResult(stat, thr, stat < thr)
