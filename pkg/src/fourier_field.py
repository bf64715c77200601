"""
Truncated Fourier lattice on T^3 x [0, T_w].

Spectra are stored in centred layout: a coefficient array of shape
(2K+1, 2M+1, 2M+1, 2J+1) holds the frequency (k, eta1, eta2, j) at index
(k+K, eta1+M, eta2+M, j+J). Coefficients are Fourier-series coefficients, so
with the normalised measure on the torus Parseval holds with constant 1.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import get_default_oversampling
from src.counting import Region
from src.errors import NonMeanZeroError, ResonantInteractionError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FreqPoint:
    """An integer frequency xi = (k, eta) in Z x Z^2."""

    k: int
    eta: Tuple[int, int] = (0, 0)

    def __add__(self, other: "FreqPoint") -> "FreqPoint":
        return FreqPoint(self.k + other.k, (self.eta[0] + other.eta[0], self.eta[1] + other.eta[1]))

    def __neg__(self) -> "FreqPoint":
        return FreqPoint(-self.k, (-self.eta[0], -self.eta[1]))

    @property
    def eta_sq(self) -> int:
        return self.eta[0] ** 2 + self.eta[1] ** 2

    def in_bounds(self, K: int, M: int) -> bool:
        return abs(self.k) <= K and abs(self.eta[0]) <= M and abs(self.eta[1]) <= M

    def require_mean_zero(self) -> "FreqPoint":
        if self.k == 0:
            raise ResonantInteractionError(f"frequency {self} lies outside the mean-zero sector")
        return self


class GridSpec(BaseModel):
    """Frequency bounds (K, M, J) and the time window length T_w."""

    model_config = ConfigDict(frozen=True)

    K: int = Field(ge=1)
    M: int = Field(ge=1)
    J: int = Field(ge=1)
    T_w: float = Field(2.0 * math.pi, gt=0.0)

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (2 * self.K + 1, 2 * self.M + 1, 2 * self.M + 1, 2 * self.J + 1)

    @property
    def spatial_shape(self) -> Tuple[int, int, int]:
        return self.shape[:3]

    @property
    def taus(self) -> np.ndarray:
        """Discrete time frequencies tau_j = 2 pi j / T_w, j = -J..J."""
        return 2.0 * math.pi * np.arange(-self.J, self.J + 1) / self.T_w

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (k, eta1, eta2, j) integer index arrays."""
        return _mesh(self.K, self.M, self.J)

    def tau_mesh(self) -> np.ndarray:
        return (2.0 * math.pi / self.T_w) * self.mesh()[3]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


@lru_cache(maxsize=64)
def _mesh(K: int, M: int, J: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    k = np.arange(-K, K + 1).reshape(-1, 1, 1, 1)
    e1 = np.arange(-M, M + 1).reshape(1, -1, 1, 1)
    e2 = np.arange(-M, M + 1).reshape(1, 1, -1, 1)
    j = np.arange(-J, J + 1).reshape(1, 1, 1, -1)
    for a in (k, e1, e2, j):
        a.flags.writeable = False
    return k, e1, e2, j


def spatial_mesh(K: int, M: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Broadcastable (k, eta1, eta2) integer index arrays."""
    k, e1, e2, _ = _mesh(K, M, 1)
    return k[..., 0], e1[..., 0], e2[..., 0]


def _frozen(coeffs: np.ndarray) -> np.ndarray:
    out = np.array(coeffs, dtype=np.complex128, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SpaceTimeSpectrum:
    """Complex coefficients u-hat(k, eta, tau_j) on a truncated grid."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if tuple(self.coeffs.shape) != self.grid.shape:
            raise ShapeError(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpaceTimeSpectrum":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_modes(
        cls, grid: GridSpec, modes: Dict[Tuple[int, int, int, int], complex]
    ) -> "SpaceTimeSpectrum":
        """Build a spectrum from {(k, eta1, eta2, j): coefficient}."""
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        for (k, e1, e2, j), value in modes.items():
            if not (abs(k) <= grid.K and abs(e1) <= grid.M and abs(e2) <= grid.M and abs(j) <= grid.J):
                raise ShapeError(f"mode {(k, e1, e2, j)} lies outside the grid")
            coeffs[k + grid.K, e1 + grid.M, e2 + grid.M, j + grid.J] += value
        return cls(grid, coeffs)

    def replace(self, coeffs: np.ndarray) -> "SpaceTimeSpectrum":
        return SpaceTimeSpectrum(self.grid, coeffs)

    def mode(self, k: int, eta: Tuple[int, int], j: int) -> complex:
        g = self.grid
        return complex(self.coeffs[k + g.K, eta[0] + g.M, eta[1] + g.M, j + g.J])

    def norm(self) -> float:
        """Coefficient l^2 norm, equal to the L^2 norm on T^3 x [0, T_w]."""
        return float(np.linalg.norm(self.coeffs.ravel()))

    def mean_mass(self) -> float:
        """l^2 norm of the k = 0 slab."""
        return float(np.linalg.norm(self.coeffs[self.grid.K].ravel()))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def nonzero_modes(self) -> Iterable[Tuple[Tuple[int, int, int, int], complex]]:
        g = self.grid
        for index in zip(*np.nonzero(self.coeffs)):
            k, e1, e2, j = (int(i) for i in index)
            yield (k - g.K, e1 - g.M, e2 - g.M, j - g.J), complex(self.coeffs[index])

    def __add__(self, other: "SpaceTimeSpectrum") -> "SpaceTimeSpectrum":
        require_same_grid(self, other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpaceTimeSpectrum") -> "SpaceTimeSpectrum":
        require_same_grid(self, other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpaceTimeSpectrum":
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpatialSpectrum:
    """Complex coefficients u-hat(k, eta) of data on T^3."""

    K: int
    M: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (2 * self.K + 1, 2 * self.M + 1, 2 * self.M + 1)
        if tuple(self.coeffs.shape) != expected:
            raise ShapeError(f"coefficient shape {self.coeffs.shape} does not match bounds {expected}")
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    @classmethod
    def zeros(cls, K: int, M: int) -> "SpatialSpectrum":
        return cls(K, M, np.zeros((2 * K + 1, 2 * M + 1, 2 * M + 1), dtype=np.complex128))

    @classmethod
    def from_modes(cls, K: int, M: int, modes: Dict[Tuple[int, int, int], complex]) -> "SpatialSpectrum":
        """Build data from {(k, eta1, eta2): coefficient}."""
        coeffs = np.zeros((2 * K + 1, 2 * M + 1, 2 * M + 1), dtype=np.complex128)
        for (k, e1, e2), value in modes.items():
            if not (abs(k) <= K and abs(e1) <= M and abs(e2) <= M):
                raise ShapeError(f"mode {(k, e1, e2)} lies outside the bounds ({K}, {M})")
            coeffs[k + K, e1 + M, e2 + M] += value
        return cls(K, M, coeffs)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.coeffs.shape)

    def replace(self, coeffs: np.ndarray) -> "SpatialSpectrum":
        return SpatialSpectrum(self.K, self.M, coeffs)

    def mode(self, k: int, eta: Tuple[int, int]) -> complex:
        return complex(self.coeffs[k + self.K, eta[0] + self.M, eta[1] + self.M])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs.ravel()))

    def mean_mass(self) -> float:
        return float(np.linalg.norm(self.coeffs[self.K].ravel()))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def require_mean_zero(self) -> "SpatialSpectrum":
        if self.mean_mass() != 0.0:
            raise NonMeanZeroError(f"data carries k = 0 mass {self.mean_mass():.3e}")
        return self

    def __add__(self, other: "SpatialSpectrum") -> "SpatialSpectrum":
        require_same_grid(self, other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpatialSpectrum") -> "SpatialSpectrum":
        require_same_grid(self, other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpatialSpectrum":
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__


Spectrum = Union[SpaceTimeSpectrum, SpatialSpectrum]


def require_same_grid(u: Spectrum, v: Spectrum) -> None:
    """Raise ShapeError unless u and v live on the same lattice."""
    if type(u) is not type(v) or u.coeffs.shape != v.coeffs.shape:
        raise ShapeError(f"grid mismatch: {u.coeffs.shape} vs {v.coeffs.shape}")
    if isinstance(u, SpaceTimeSpectrum) and u.grid.T_w != v.grid.T_w:
        raise ShapeError(f"time window mismatch: {u.grid.T_w} vs {v.grid.T_w}")


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def _wrapped_index(bounds: Sequence[int], shape: Sequence[int]) -> Tuple[np.ndarray, ...]:
    axes = [np.arange(-b, b + 1) % n for b, n in zip(bounds, shape)]
    return np.ix_(*axes)


def _check_sample_shape(shape: Sequence[int], bounds: Sequence[int]) -> None:
    if len(shape) != len(bounds):
        raise ShapeError(f"expected {len(bounds)} sample axes, got {len(shape)}")
    for n, b in zip(shape, bounds):
        if n < 2 * b + 1:
            raise ShapeError(f"sample shape {tuple(shape)} cannot resolve frequency bounds {tuple(bounds)}")


def _analyse(samples: np.ndarray, bounds: Sequence[int]) -> np.ndarray:
    samples = np.asarray(samples)
    _check_sample_shape(samples.shape, bounds)
    full = np.fft.fftn(samples) / samples.size
    return full[_wrapped_index(bounds, samples.shape)]


def _synthesise(coeffs: np.ndarray, bounds: Sequence[int], shape: Optional[Sequence[int]]) -> np.ndarray:
    shape = tuple(coeffs.shape) if shape is None else tuple(shape)
    _check_sample_shape(shape, bounds)
    full = np.zeros(shape, dtype=np.complex128)
    full[_wrapped_index(bounds, shape)] = coeffs
    return np.fft.ifftn(full) * full.size


def forward_transform(samples: np.ndarray, grid: GridSpec) -> SpaceTimeSpectrum:
    """
    Fourier coefficients of samples on the uniform (x, y1, y2, t) grid.

    Sample a sits at x = 2 pi a / N_x (likewise for y) and c at t = c T_w / N_t.
    Padded sample counts are accepted; frequencies beyond the grid are dropped.

    Args:
        samples: Array of shape (N_x, N_y, N_y, N_t) with N >= 2 * bound + 1
        grid: Target grid

    Returns:
        SpaceTimeSpectrum: The truncated coefficients

    Raises:
        ShapeError: On a wrong number of axes or too few samples
    """
    bounds = (grid.K, grid.M, grid.M, grid.J)
    return SpaceTimeSpectrum(grid, _analyse(samples, bounds))


def inverse_transform(u: SpaceTimeSpectrum, shape: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Physical samples of u, optionally on a zero-padded (oversampled) grid.

    Args:
        u: The spectrum
        shape: Sample shape; defaults to the grid shape

    Returns:
        np.ndarray: Complex samples
    """
    g = u.grid
    return _synthesise(u.coeffs, (g.K, g.M, g.M, g.J), shape)


def spatial_forward_transform(samples: np.ndarray, K: int, M: int) -> SpatialSpectrum:
    """Fourier coefficients of samples on the uniform (x, y1, y2) grid."""
    return SpatialSpectrum(K, M, _analyse(samples, (K, M, M)))


def spatial_inverse_transform(u: SpatialSpectrum, shape: Optional[Sequence[int]] = None) -> np.ndarray:
    """Physical samples of spatial data."""
    return _synthesise(u.coeffs, (u.K, u.M, u.M), shape)


def oversampled_shape(bounds: Sequence[int], oversample: int) -> Tuple[int, ...]:
    return tuple(oversample * (2 * b + 1) for b in bounds)


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


def _eta_arrays(u: Spectrum) -> Tuple[np.ndarray, np.ndarray]:
    M = (u.coeffs.shape[1] - 1) // 2
    e = np.arange(-M, M + 1)
    return e[:, None], e[None, :]


def _apply_eta_mask(u: Spectrum, mask: np.ndarray) -> Spectrum:
    expand = mask.reshape((1,) + mask.shape + (1,) * (u.coeffs.ndim - 3))
    return u.replace(np.where(expand, u.coeffs, 0.0))


def project_mean_zero(u: Spectrum) -> Spectrum:
    """Zero every k = 0 coefficient."""
    coeffs = np.array(u.coeffs)
    coeffs[(coeffs.shape[0] - 1) // 2] = 0.0
    return u.replace(coeffs)


def ball_mask(e1: np.ndarray, e2: np.ndarray, l: int) -> np.ndarray:
    return e1 * e1 + e2 * e2 <= 4 ** l


def project_ball(u: Spectrum, l: int) -> Spectrum:
    """P_l: keep |eta| <= 2^l."""
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l}")
    e1, e2 = _eta_arrays(u)
    return _apply_eta_mask(u, ball_mask(e1, e2, l))


def project_shell(u: Spectrum, l: int) -> Spectrum:
    """P_{Delta l} = P_l - P_{l-1}, with P_{Delta 0} = P_0."""
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l}")
    e1, e2 = _eta_arrays(u)
    mask = ball_mask(e1, e2, l)
    if l > 0:
        mask &= ~ball_mask(e1, e2, l - 1)
    return _apply_eta_mask(u, mask)


def shell_count(M: int) -> int:
    """Number of dyadic shells needed to cover |eta_i| <= M."""
    l = 0
    while 4 ** l < 2 * M * M:
        l += 1
    return l + 1


def tile_index(eta: Tuple[int, int], l: int) -> Tuple[int, int]:
    """
    The alpha with eta in Q^l_alpha.

    Q^l_alpha is the half-open square [2^l alpha_i - 2^(l-1), 2^l alpha_i + 2^(l-1))
    per coordinate.
    """
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l}")
    side = 2 ** (l + 1)
    return tuple((2 * e + 2 ** l) // side for e in eta)


def _square_mask(e1: np.ndarray, e2: np.ndarray, l: int, alpha: Tuple[int, int], widened: bool) -> np.ndarray:
    # doubled coordinates keep the l = 0 half-integer edges integral
    half = 2 ** (l + 1) if widened else 2 ** l
    c1, c2 = 2 ** (l + 1) * alpha[0], 2 ** (l + 1) * alpha[1]
    in1 = (2 * e1 >= c1 - half) & (2 * e1 < c1 + half)
    in2 = (2 * e2 >= c2 - half) & (2 * e2 < c2 + half)
    return in1 & in2


def project_square(u: Spectrum, l: int, alpha: Tuple[int, int], widened: bool = False) -> Spectrum:
    """
    Keep eta in the tile Q^l_alpha of side 2^l centred at 2^l alpha.

    Args:
        u: The spectrum
        l: Scale, l >= 0
        alpha: Tile index
        widened: Use the doubled square of side 2^(l+1) with the same centre

    Returns:
        The projected spectrum
    """
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l}")
    e1, e2 = _eta_arrays(u)
    return _apply_eta_mask(u, _square_mask(e1, e2, l, alpha, widened))


def tiles_covering(M: int, l: int) -> Iterable[Tuple[int, int]]:
    """All tile indices alpha at scale l meeting the box |eta_i| <= M."""
    lo = tile_index((-M, -M), l)[0]
    hi = tile_index((M, M), l)[0]
    for a1 in range(lo, hi + 1):
        for a2 in range(lo, hi + 1):
            yield (a1, a2)


def project_region(u: Spectrum, region: Region) -> Spectrum:
    """Keep eta in a closed disc or square."""
    e1, e2 = _eta_arrays(u)
    return _apply_eta_mask(u, region.contains(e1, e2))


# ---------------------------------------------------------------------------
# Norms, pairings, symmetries
# ---------------------------------------------------------------------------


def lebesgue_norm(u: Spectrum, p: float, oversample: Optional[int] = None) -> float:
    """
    L^p norm over the torus with the normalised measure.

    Samples are taken on a grid zero-padded by the oversampling factor; for
    p = 2 quadrature at any factor is exact.

    Args:
        u: Spectrum (space-time or spatial)
        p: Exponent, p >= 1 or inf
        oversample: Padding factor, defaults to KPLAB_OVERSAMPLING

    Returns:
        float: The norm

    Raises:
        ValueError: If p < 1
    """
    if not p >= 1:
        raise ValueError(f"L^p norm requires p >= 1, got {p}")
    if u.is_zero():
        return 0.0
    factor = get_default_oversampling() if oversample is None else max(1, int(oversample))
    bounds = [(n - 1) // 2 for n in u.coeffs.shape]
    samples = _synthesise(u.coeffs, bounds, oversampled_shape(bounds, factor))
    modulus = np.abs(samples)
    if math.isinf(p):
        return float(modulus.max())
    return float(np.mean(modulus ** p) ** (1.0 / p))


def inner_product(u: Spectrum, v: Spectrum) -> complex:
    """<u, v> = sum u-hat conj(v-hat), linear in the first argument."""
    require_same_grid(u, v)
    return complex(np.vdot(v.coeffs.ravel(), u.coeffs.ravel()))


def conjugate(u: Spectrum) -> Spectrum:
    """The spectrum of the complex conjugate field: conj(u-hat(-xi, -tau))."""
    reverse = (slice(None, None, -1),) * u.coeffs.ndim
    return u.replace(np.conj(u.coeffs[reverse]))


def is_real(u: Spectrum, tol: float = 1e-12) -> bool:
    """True when u-hat(-xi, -tau) = conj(u-hat(xi, tau)) to tol (relative)."""
    deviation = np.max(np.abs(u.coeffs - conjugate(u).coeffs), initial=0.0)
    return bool(deviation <= tol * max(1.0, u.norm()))


def real_part(u: Spectrum) -> Spectrum:
    """Spectrum of Re(u)."""
    return u.replace(0.5 * (u.coeffs + conjugate(u).coeffs))


def embed(u: SpaceTimeSpectrum, grid: GridSpec) -> SpaceTimeSpectrum:
    """Zero-pad or truncate u onto another grid with the same time window."""
    out = np.zeros(grid.shape, dtype=np.complex128)
    g = u.grid
    K, M, J = min(g.K, grid.K), min(g.M, grid.M), min(g.J, grid.J)
    src = (slice(g.K - K, g.K + K + 1), slice(g.M - M, g.M + M + 1), slice(g.M - M, g.M + M + 1), slice(g.J - J, g.J + J + 1))
    dst = (slice(grid.K - K, grid.K + K + 1), slice(grid.M - M, grid.M + M + 1), slice(grid.M - M, grid.M + M + 1), slice(grid.J - J, grid.J + J + 1))
    out[dst] = u.coeffs[src]
    return SpaceTimeSpectrum(grid, out)


def embed_spatial(u: SpatialSpectrum, K: int, M: int) -> SpatialSpectrum:
    """Zero-pad or truncate spatial data onto bounds (K, M)."""
    out = np.zeros((2 * K + 1, 2 * M + 1, 2 * M + 1), dtype=np.complex128)
    k, m = min(u.K, K), min(u.M, M)
    src = (slice(u.K - k, u.K + k + 1), slice(u.M - m, u.M + m + 1), slice(u.M - m, u.M + m + 1))
    dst = (slice(K - k, K + k + 1), slice(M - m, M + m + 1), slice(M - m, M + m + 1))
    out[dst] = u.coeffs[src]
    return SpatialSpectrum(K, M, out)


# ---------------------------------------------------------------------------
# Time localisation
# ---------------------------------------------------------------------------


def bump(s: np.ndarray) -> np.ndarray:
    """Smooth bump exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere, bump(0) = 1."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.zeros_like(s)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def centred_times(grid: GridSpec, n_t: int) -> np.ndarray:
    """Sample times c T_w / n_t wrapped into [-T_w/2, T_w/2)."""
    t = np.arange(n_t) * grid.T_w / n_t
    return np.where(t >= grid.T_w / 2.0, t - grid.T_w, t)


def time_cutoff(u: SpaceTimeSpectrum, T: float, oversample: Optional[int] = None) -> SpaceTimeSpectrum:
    """
    Multiply u by bump(t / T), supported in [-T, T] on the centred window.

    Args:
        u: The spectrum
        T: Half-width of the cutoff, 0 < T <= T_w / 2
        oversample: Time padding factor before re-truncation

    Returns:
        SpaceTimeSpectrum: The localised field, truncated to the grid
    """
    g = u.grid
    if not 0.0 < T <= g.T_w / 2.0:
        raise ValueError(f"cutoff half-width must lie in (0, T_w/2], got {T}")
    factor = get_default_oversampling() if oversample is None else max(1, int(oversample))
    n_t = factor * (2 * g.J + 1)
    shape = g.spatial_shape + (n_t,)
    samples = inverse_transform(u, shape)
    window = bump(centred_times(g, n_t) / T)
    return forward_transform(samples * window[None, None, None, :], g)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def random_spectrum(
    grid: GridSpec, rng: np.random.Generator, mean_zero: bool = True, real: bool = False
) -> SpaceTimeSpectrum:
    """Complex Gaussian coefficients, optionally mean-zero and conjugate-symmetric."""
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    u = SpaceTimeSpectrum(grid, coeffs)
    if real:
        u = real_part(u)
    return project_mean_zero(u) if mean_zero else u


def random_spatial(
    K: int, M: int, rng: np.random.Generator, mean_zero: bool = True, real: bool = False
) -> SpatialSpectrum:
    shape = (2 * K + 1, 2 * M + 1, 2 * M + 1)
    u = SpatialSpectrum(K, M, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    if real:
        u = real_part(u)
    return project_mean_zero(u) if mean_zero else u
