"""Special-function kernels used throughout the library.

Bessel functions of the first kind at integer and half-integer order, the
normalized radial covariance kernel of isotropic monochromatic waves, Hermite
polynomials (probabilists' convention), normalized Gegenbauer polynomials, and
the Bessel main term of their large-degree approximation.

All evaluators accept scalars or numpy arrays and are pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "BesselOrder",
    "GegenbauerSpec",
    "bessel_j",
    "jd",
    "jd_amplitude_constant",
    "jd_asymptotic",
    "hermite",
    "gegenbauer",
    "hilb_main_term",
    "eigenspace_dim",
]

# Evaluation-strategy switch points.  The ascending series is summed in
# double-double arithmetic, so it stays accurate up to the crossover even
# though the alternating terms grow to ~e^x/x before cancelling.
_SERIES_MAX = 15.0
_TRIG_MIN = 2.0
_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting


@dataclass(frozen=True)
class BesselOrder:
    """Bessel order tied to an ambient dimension: nu = d/2 - 1."""

    d: int

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")

    @property
    def nu(self) -> float:
        return 0.5 * self.d - 1.0


@dataclass(frozen=True)
class GegenbauerSpec:
    """Degree-ell normalized Gegenbauer polynomial on the sphere S^d."""

    d: int
    ell: int

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        if int(self.ell) != self.ell or self.ell < 0:
            raise ValueError(f"degree must be an integer >= 0, got {self.ell}")

    @property
    def nu(self) -> float:
        return 0.5 * self.d - 1.0

    @property
    def L(self) -> float:
        return self.ell + 0.5 * (self.d - 1)


def _as_nu(order) -> float:
    """Accept a BesselOrder or a bare (half-)integer order >= 0."""
    nu = order.nu if isinstance(order, BesselOrder) else float(order)
    if not math.isfinite(nu) or nu < 0:
        raise ValueError(f"order must be finite and >= 0, got {nu}")
    if abs(2 * nu - round(2 * nu)) > 1e-12:
        raise ValueError(f"order must be an integer or half-integer, got {nu}")
    return nu


# ---------------------------------------------------------------------------
# Double-double helpers (error-free transforms), vectorized over arrays.
# ---------------------------------------------------------------------------

def _two_sum(a, b):
    s = a + b
    t = s - a
    return s, (a - (s - t)) + (b - t)


def _two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_renorm(h, l):
    s = h + l
    return s, l - (s - h)


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    return _dd_renorm(s, e + xl + yl)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    return _dd_renorm(p, e + xh * yl + xl * yh)


def _dd_div_scalar(xh, xl, c):
    q1 = xh / c
    p, e = _two_prod(q1, c)
    return _dd_renorm(q1, (((xh - p) - e) + xl) / c)


def _kernel_series(nu: float, x: np.ndarray) -> np.ndarray:
    """sum_k (-1)^k (x^2/4)^k / (k! (nu+1)_k)  =  nu! (x/2)^{-nu} J_nu(x).

    Double-double accumulation keeps the alternating cancellation below
    ~1e-25 absolute for x <= _SERIES_MAX.
    """
    zh, zl = _two_prod(x, x)
    zh, zl = zh * 0.25, zl * 0.25
    sh = np.ones_like(x)
    sl = np.zeros_like(x)
    th = np.ones_like(x)
    tl = np.zeros_like(x)
    for k in range(1, 120):
        th, tl = _dd_mul(th, tl, zh, zl)
        th, tl = _dd_div_scalar(th, tl, -(k * (nu + k)))
        sh, sl = _dd_add(sh, sl, th, tl)
        if np.all(np.abs(th) <= 1e-34 * np.abs(sh) + 1e-300):
            break
    return sh + sl


def _bessel_asymptotic(nu: float, x: np.ndarray) -> np.ndarray:
    """Large-argument phase-amplitude expansion of J_nu, adaptively truncated."""
    mu = 4.0 * nu * nu
    c = np.ones_like(x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.full_like(x, np.inf)
    for k in range(1, 40):
        c = c * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(c)
        # freeze elements once terms stop shrinking (optimal truncation)
        active &= mag < prev
        if not active.any():
            break
        prev = mag
        contrib = np.where(active, c, 0.0) * ((-1.0) ** (k // 2))
        if k % 2 == 0:
            p = p + contrib
        else:
            q = q + contrib
        if np.all(~active | (mag < 1e-19)):
            break
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _spherical_bessel_trig(n: int, x: np.ndarray) -> np.ndarray:
    """Spherical Bessel j_n by closed trig forms / upward recurrence, x > 0."""
    s = np.sin(x)
    j0 = s / x
    if n == 0:
        return j0
    j1 = (s / x - np.cos(x)) / x
    for k in range(1, n):
        j0, j1 = j1, (2 * k + 1) / x * j1 - j0
    return j1


def _bessel_j_arr(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    half = (round(2 * nu) % 2) == 1
    cut = _TRIG_MIN if half else _SERIES_MAX
    small = x <= cut
    if small.any():
        xs = x[small]
        s = _kernel_series(nu, xs)
        # J = S * (x/2)^nu / nu!; numpy 0^0 = 1 handles nu = 0 at the origin
        out[small] = s * np.power(0.5 * xs, nu) / math.exp(gammaln(nu + 1))
    big = ~small
    if big.any():
        xb = x[big]
        if half:
            n = int(round(nu - 0.5))
            out[big] = np.sqrt(2.0 * xb / math.pi) * _spherical_bessel_trig(n, xb)
        else:
            out[big] = _bessel_asymptotic(nu, xb)
    return out


def bessel_j(order, x):
    """Bessel function of the first kind J_nu(x) for x >= 0.

    Order must be a non-negative integer or half-integer (a BesselOrder or a
    bare number).  Ascending power series below the crossover, phase-amplitude
    expansion above; half-integer orders use exact trigonometric forms.
    """
    nu = _as_nu(order)
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ValueError("argument must be finite")
    if np.any(arr < 0):
        raise ValueError("argument must be >= 0")
    out = _bessel_j_arr(nu, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def _validate_dim(d: int) -> float:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    return 0.5 * d - 1.0


def _jd_arr(d: int, r: np.ndarray) -> np.ndarray:
    nu = 0.5 * d - 1.0
    out = np.empty_like(r)
    small = r <= _SERIES_MAX
    if small.any():
        # the normalized kernel is exactly the prefactor-free series
        out[small] = _kernel_series(nu, r[small])
    big = ~small
    if big.any():
        rb = r[big]
        j = _bessel_j_arr(nu, rb)
        out[big] = np.exp(gammaln(nu + 1) + nu * (math.log(2.0) - np.log(rb))) * j
    return out


def jd(d: int, r):
    """Normalized wave kernel nu! 2^nu r^{-nu} J_nu(r), nu = d/2 - 1.

    Unit value at r = 0 (removable singularity); equals sin(r)/r for d = 3.
    """
    nu = _validate_dim(d)
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ValueError("argument must be finite")
    if np.any(arr < 0):
        raise ValueError("argument must be >= 0")
    out = _jd_arr(d, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def jd_amplitude_constant(d: int) -> float:
    """The constant C_d with jd(r) ~ C_d r^{-(d-1)/2} cos(r - phase) at large r."""
    nu = _validate_dim(d)
    return math.exp(gammaln(nu + 1)) * 2.0**nu * math.sqrt(2.0 / math.pi)


def jd_asymptotic(d: int, r):
    """Cosine-envelope approximation of jd: returns (amplitude, phase_shift).

    jd(d, r) ~ amplitude * cos(r - phase_shift) with
    amplitude = C_d (r v 1)^{-(d-1)/2} and phase_shift = (d-1) pi / 4; the
    remainder is O(r^{1 - d/2}).
    """
    _validate_dim(d)
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("argument must be > 0")
    amp = jd_amplitude_constant(d) * np.maximum(arr, 1.0) ** (-0.5 * (d - 1))
    phase = (d - 1) * math.pi / 4.0
    if arr.ndim == 0:
        return float(amp), phase
    return amp, phase


def hermite(q: int, t):
    """Probabilists' Hermite polynomial H_q(t).

    Three-term recurrence H_{k+1} = t H_k - k H_{k-1}, H_0 = 1, H_1 = t.
    """
    if int(q) != q or q < 0:
        raise ValueError(f"degree must be an integer >= 0, got {q}")
    arr = np.asarray(t, dtype=float)
    h0 = np.ones_like(arr)
    if q == 0:
        return float(h0) if arr.ndim == 0 else h0
    h1 = arr.copy()
    for k in range(1, q):
        h0, h1 = h1, arr * h1 - k * h0
    return float(h1) if arr.ndim == 0 else h1


def gegenbauer(spec: GegenbauerSpec, t):
    """Normalized Gegenbauer polynomial with G(1) = 1 on [-1, 1].

    Evaluates binom(ell+nu, ell)^{-1} P^{(nu,nu)}_ell(t) by folding the
    normalization into the Jacobi three-term recurrence, which keeps every
    intermediate in [-1, 1] for arbitrary degree:

        G_k = ((2k + 2nu - 1) t G_{k-1} - (k - 1) G_{k-2}) / (k + 2nu)
    """
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise ValueError("argument must lie in [-1, 1]")
    arr = np.clip(arr, -1.0, 1.0)
    a = spec.nu
    g0 = np.ones_like(arr)
    if spec.ell == 0:
        return float(g0) if arr.ndim == 0 else g0
    g1 = arr.copy()
    for k in range(2, spec.ell + 1):
        g0, g1 = g1, ((2 * k + 2 * a - 1) * arr * g1 - (k - 1) * g0) / (k + 2 * a)
    return float(g1) if arr.ndim == 0 else g1


def hilb_main_term(spec: GegenbauerSpec, theta):
    """Bessel main term of the large-degree Gegenbauer approximation.

    Returns (sin t)^{-nu} (2^nu / binom(ell+nu, ell)) (Gamma(ell+d/2) /
    (L^nu ell!)) (t / sin t)^{1/2} J_nu(L t); the Gamma ratio cancels the
    binomial exactly, leaving (t/sin t)^{nu + 1/2} jd(d, L t).
    """
    arr = np.asarray(theta, dtype=float)
    if np.any((arr <= 0.0) | (arr >= math.pi)):
        raise ValueError("angle must lie strictly inside (0, pi)")
    nu = spec.nu
    big_l = spec.L
    vals = np.atleast_1d(arr)
    out = (vals / np.sin(vals)) ** (nu + 0.5) * _jd_arr(spec.d, big_l * vals)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def eigenspace_dim(d: int, ell: int) -> int:
    """Dimension of the degree-ell Laplace eigenspace on S^d, exact integer."""
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if int(ell) != ell or ell < 1:
        raise ValueError(f"degree must be an integer >= 1, got {ell}")
    num = (2 * ell + d - 1) * math.comb(ell + d - 2, ell - 1)
    if num % ell:
        raise ArithmeticError("eigenspace dimension is not an integer")
    return num // ell
