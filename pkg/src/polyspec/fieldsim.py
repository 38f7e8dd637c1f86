"""Monte Carlo oracles: Gaussian wave samples, domain quadratures, and
variance estimates of Hermite wave functionals.

Two samplers: a superposition of randomly oriented plane waves (Euclidean
only, cheap per point, exact covariance in expectation) and a dense
covariance factorization (exact in law for any finite point set, both
geometries).  Trials are drawn in fixed-size chunks with chunk-indexed
substreams, so results are reproducible for a given seed regardless of
scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.stats import chi2 as chi2_dist

from . import specfun, walk
from .geometry import Geometry
from .quadrature import gauss_jacobi_symmetric, integrate_adaptive
from .variance import FieldSpec, PolyspectrumSpec

__all__ = [
    "PlaneWaves",
    "CovarianceFactor",
    "FieldSampler",
    "QuadratureDomain",
    "MCVariance",
    "CovarianceFactorizationError",
    "sample_field_values",
    "build_domain",
    "mc_polyspectrum_variance",
    "mc_walk_density_check",
]

COVARIANCE_POINT_BUDGET = 4096
_NUGGET_LADDER = (1e-12, 1e-10, 1e-8)
_TRIAL_CHUNK = 256


class CovarianceFactorizationError(np.linalg.LinAlgError):
    """Covariance factorization failed even at the maximum nugget."""


@dataclass(frozen=True)
class PlaneWaves:
    n_waves: int = 4096

    def __post_init__(self) -> None:
        if self.n_waves < 64:
            raise ValueError("need at least 64 plane waves")


@dataclass(frozen=True)
class CovarianceFactor:
    nugget: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.nugget <= 1e-8:
            raise ValueError("nugget must lie in [0, 1e-8]")


@dataclass
class FieldSampler:
    spec: FieldSpec
    method: Union[PlaneWaves, CovarianceFactor]
    seed: int
    _draws: int = field(default=0, repr=False)
    _cache_key: tuple | None = field(default=None, repr=False)
    _chol: np.ndarray | None = field(default=None, repr=False)
    nugget_used: float | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if isinstance(self.method, PlaneWaves) and self.spec.geometry != Geometry.EUCLIDEAN:
            raise ValueError("plane-wave superposition is Euclidean-only")


def _covariance_matrix(spec: FieldSpec, points: np.ndarray) -> np.ndarray:
    if spec.geometry == Geometry.EUCLIDEAN:
        diff = points[:, None, :] - points[None, :, :]
        dist = np.sqrt(np.maximum(np.einsum("ijk,ijk->ij", diff, diff), 0.0))
        return specfun.jd(spec.d, spec.freq * dist)
    gram = np.clip(points @ points.T, -1.0, 1.0)
    gspec = specfun.GegenbauerSpec(spec.d, spec.ell)
    return specfun.gegenbauer(gspec, gram)


def _cholesky_factor(sampler: FieldSampler, points: np.ndarray) -> np.ndarray:
    key = (points.shape, hash(points.tobytes()))
    if sampler._cache_key == key and sampler._chol is not None:
        return sampler._chol
    if len(points) > COVARIANCE_POINT_BUDGET:
        raise ValueError(
            f"covariance sampling limited to {COVARIANCE_POINT_BUDGET} points"
        )
    cov = _covariance_matrix(sampler.spec, points)
    ladder = (sampler.method.nugget,) + tuple(
        n for n in _NUGGET_LADDER if n > sampler.method.nugget
    )
    for nug in ladder:
        try:
            chol = np.linalg.cholesky(cov + nug * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            continue
        sampler._cache_key = key
        sampler._chol = chol
        sampler.nugget_used = nug
        return chol
    eigmin = float(np.linalg.eigvalsh(cov).min())
    raise CovarianceFactorizationError(
        f"covariance not factorizable at nugget {ladder[-1]:g};"
        f" smallest eigenvalue ~ {eigmin:.3e}"
    )


def _draw_fields(sampler: FieldSampler, points: np.ndarray, rng: np.random.Generator,
                 n_draws: int) -> np.ndarray:
    """Joint field values at the given points, shape (len(points), n_draws)."""
    spec = sampler.spec
    if isinstance(sampler.method, CovarianceFactor):
        chol = _cholesky_factor(sampler, points)
        z = rng.standard_normal((len(points), n_draws))
        return chol @ z
    n = sampler.method.n_waves
    lam = spec.freq
    out = np.empty((len(points), n_draws))
    for t in range(n_draws):
        dirs = rng.standard_normal((n, spec.d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        phases = rng.uniform(0.0, 2.0 * math.pi, n)
        # sqrt(2/N) normalization makes the pointwise variance exactly 1
        out[:, t] = math.sqrt(2.0 / n) * np.cos(
            lam * points @ dirs.T + phases
        ).sum(axis=1)
    return out


def sample_field_values(sampler: FieldSampler, points) -> np.ndarray:
    """One joint sample of the wave at the given points.

    Successive calls advance the sampler's substream counter; results are
    reproducible for a fixed seed and call order.
    """
    points = np.ascontiguousarray(points, dtype=float)
    rng = np.random.default_rng([sampler.seed, sampler._draws])
    sampler._draws += 1
    return _draw_fields(sampler, points, rng, 1)[:, 0]


@dataclass
class QuadratureDomain:
    geometry: Geometry
    d: int
    R: float
    points: np.ndarray
    weights: np.ndarray

    @property
    def volume(self) -> float:
        return float(self.weights.sum())


def _sphere_rule(m: int, n_polar: int, n_azimuth: int):
    """Product quadrature on the unit sphere S^m in R^(m+1)."""
    if m == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if m == 1:
        ang = 2.0 * math.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
        return pts, np.full(n_azimuth, 2.0 * math.pi / n_azimuth)
    sub_pts, sub_w = _sphere_rule(m - 1, n_polar, n_azimuth)
    # colatitude measure sin^(m-1) dtheta = (1-t^2)^((m-2)/2) dt, the
    # symmetric Jacobi weight of order nu = (m-1)/2
    t, tw = gauss_jacobi_symmetric(0.5 * (m - 1), n_polar)
    s = np.sqrt(np.maximum(1.0 - t * t, 0.0))
    pts = np.concatenate(
        [
            np.column_stack(
                [np.full(len(sub_pts), ti), si * sub_pts]
            )
            for ti, si in zip(t, s)
        ]
    )
    w = np.concatenate([wi * sub_w for wi in tw])
    return pts, w


def build_domain(geometry: Geometry, d: int, R: float, resolution: int) -> QuadratureDomain:
    """Positive-weight product quadrature over a ball or geodesic cap.

    Euclidean: Gauss-Legendre radii against r^(d-1) times a product rule on
    S^(d-1).  Spherical: Gauss-Legendre colatitudes against sin(theta)^(d-1)
    times the same angular rule, with points embedded in R^(d+1).  Weights
    sum to the domain volume.
    """
    geometry = Geometry(geometry)
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    n_azimuth = 4 * resolution
    from numpy.polynomial.legendre import leggauss

    x, wx = leggauss(resolution)
    if geometry == Geometry.EUCLIDEAN:
        r = 0.5 * R * (x + 1.0)
        wr = 0.5 * R * wx * r ** (d - 1)
        sph, sw = _sphere_rule(d - 1, resolution, n_azimuth)
        pts = (r[:, None, None] * sph[None, :, :]).reshape(-1, d)
        w = (wr[:, None] * sw[None, :]).ravel()
    else:
        if not (0 < R <= math.pi):
            raise ValueError("cap radius must lie in (0, pi]")
        theta = 0.5 * R * (x + 1.0)
        wt = 0.5 * R * wx * np.sin(theta) ** (d - 1)
        sph, sw = _sphere_rule(d - 1, resolution, n_azimuth)
        pts = np.concatenate(
            [
                np.column_stack(
                    [np.full(len(sph), math.cos(t)), math.sin(t) * sph]
                )
                for t in theta
            ]
        )
        w = (wt[:, None] * sw[None, :]).ravel()
    return QuadratureDomain(geometry, d, R, pts, w)


@dataclass
class MCVariance:
    trials: int
    estimate: float
    ci95: tuple[float, float]
    seed: int

    def __post_init__(self) -> None:
        lo, hi = self.ci95
        if not lo <= self.estimate <= hi:
            raise ValueError("confidence interval must bracket the estimate")


def mc_polyspectrum_variance(spec: PolyspectrumSpec, sampler: FieldSampler,
                             domain: QuadratureDomain, trials: int) -> MCVariance:
    """Sample variance of int_D H_q(field) over independent field draws.

    The 95% interval uses the normal approximation for the variance of
    i.i.d. functionals with the fourth-moment correction.  Deterministic
    for a fixed seed: trials are partitioned into fixed chunks with
    chunk-indexed substreams.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    q = spec.q
    vals = np.empty(trials)
    for idx, start in enumerate(range(0, trials, _TRIAL_CHUNK)):
        m = min(_TRIAL_CHUNK, trials - start)
        rng = np.random.default_rng([sampler.seed, 1_000_000 + idx])
        fields = _draw_fields(sampler, domain.points, rng, m)
        vals[start:start + m] = domain.weights @ specfun.hermite(q, fields)
    est = float(np.var(vals, ddof=1))
    centered = vals - vals.mean()
    m4 = float(np.mean(centered**4))
    var_of_var = max(m4 - est**2 * (trials - 3) / (trials - 1), 0.0) / trials
    half = 1.959963984540054 * math.sqrt(var_of_var)
    return MCVariance(trials, est, (est - half, est + half), sampler.seed)


def _bin_masses(spec: walk.WalkSpec, edges: np.ndarray) -> np.ndarray:
    """Analytic probability mass of the walk radius in each bin."""
    d, n = spec.d, spec.n
    if n == 2:
        def rho(r: np.ndarray) -> np.ndarray:
            return walk.rho2_closed(d, r)
    else:
        tab, _ = walk._psi_level(d, n)

        def rho(r: np.ndarray) -> np.ndarray:
            return tab(r) * r ** (d - 1)

    kinks = [float(k) for k in range(1, n + 1)]
    masses = np.empty(len(edges) - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        splits = [k for k in kinks if lo < k < hi]
        res = integrate_adaptive(rho, lo, hi, 1e-9, split_points=splits,
                                 max_evals=200_000)
        masses[i] = res.value
    return masses


def mc_walk_density_check(spec: walk.WalkSpec, n_samples: int, bins: int,
                          seed: int = 42):
    """Chi-square goodness of fit of sampled walk radii against the density.

    Equal-width bins over the support; bins whose expected count falls below
    10 are merged into their neighbor (this also absorbs the registered
    infinite-density point of the planar 3-step walk).  Returns
    (chi2, pvalue).
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    if n_samples < 10 * bins:
        raise ValueError("expected counts below 10: too many bins for the sample size")
    radii = walk.sample_walk(spec, n_samples, seed)
    edges = np.linspace(0.0, float(spec.n), bins + 1)
    counts, _ = np.histogram(radii, edges)
    expected = n_samples * _bin_masses(spec, edges)
    # merge under-populated or singular bins into the left neighbor
    singular = [r for r in walk.SINGULAR_INTERIOR_POINTS.get((spec.d, spec.n), ())]
    keep_counts, keep_exp = [], []
    carry_c, carry_e = 0.0, 0.0
    for i in range(bins):
        carry_c += counts[i]
        carry_e += expected[i]
        boundary_singular = any(
            edges[i] <= r0 <= edges[i + 1] + 1e-12 for r0 in singular
        )
        if carry_e >= 10.0 and not boundary_singular:
            keep_counts.append(carry_c)
            keep_exp.append(carry_e)
            carry_c, carry_e = 0.0, 0.0
    if carry_e > 0:
        if not keep_exp:
            raise ValueError("expected counts below 10 in every bin")
        keep_counts[-1] += carry_c
        keep_exp[-1] += carry_e
    counts_arr = np.array(keep_counts)
    exp_arr = np.array(keep_exp)
    if np.any(exp_arr < 10.0):
        raise ValueError("expected counts below 10 after merging")
    exp_arr *= counts_arr.sum() / exp_arr.sum()
    stat = float(np.sum((counts_arr - exp_arr) ** 2 / exp_arr))
    dof = len(exp_arr) - 1
    return stat, float(chi2_dist.sf(stat, dof))
