"""
Products as truncated frequency convolutions, the bilinear multiplier
M^-eps, y-derivatives, free evolution and the Schroedinger factorization.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Sequence, Tuple

import numpy as np

from src.errors import NonMeanZeroError, ShapeError
from src.fourier_field import (
    FreqPoint,
    GridSpec,
    SpaceTimeSpectrum,
    SpatialSpectrum,
    Spectrum,
    centred_times,
    conjugate,
    inner_product,
    project_mean_zero,
    require_same_grid,
    spatial_mesh,
)
from src.phase_resonance import DispersionParams, phi0, phi_grid

logger = logging.getLogger(__name__)

# Inputs with at most this many nonzero coefficients are convolved by direct summation
DIRECT_MAX_TERMS = 64

# Pairwise summation is used while (occupied pairs) x (time convolution length) stays below this
PAIRWISE_MAX_WORK = 50_000_000
PAIRWISE_CHUNK = 2_000_000

Method = Literal["auto", "direct", "pairwise", "fft"]


@dataclass(frozen=True)
class InteractionTriple:
    """An interaction xi = xi1 + xi2."""

    xi1: FreqPoint
    xi2: FreqPoint

    @property
    def xi(self) -> FreqPoint:
        return self.xi1 + self.xi2

    @property
    def mixed_vector(self) -> Tuple[int, int]:
        """k1 eta - k eta1, equal to k1 eta2 - k2 eta1."""
        k1, k2 = self.xi1.k, self.xi2.k
        e1, e2 = self.xi1.eta, self.xi2.eta
        return (k1 * e2[0] - k2 * e1[0], k1 * e2[1] - k2 * e1[1])

    def m_eps_weight(self, eps: float) -> float:
        """<k1 eta - k eta1>^-eps, zero when the output has k = 0."""
        if self.xi.k == 0:
            return 0.0
        v = self.mixed_vector
        return float((1.0 + v[0] ** 2 + v[1] ** 2) ** (-eps / 2.0))


def _shift_slices(offsets: Sequence[int], bounds: Sequence[int]) -> Tuple[Tuple[slice, ...], Tuple[slice, ...]]:
    """Destination and source slices for out[f + d] += a[f] with truncation to the grid."""
    dst, src = [], []
    for d, b in zip(offsets, bounds):
        n = 2 * b + 1
        if d >= 0:
            dst.append(slice(d, n))
            src.append(slice(0, n - d))
        else:
            dst.append(slice(0, n + d))
            src.append(slice(-d, n))
    return tuple(dst), tuple(src)


def _bounds(coeffs: np.ndarray) -> Tuple[int, ...]:
    return tuple((n - 1) // 2 for n in coeffs.shape)


def _convolve_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.count_nonzero(a) > np.count_nonzero(b):
        a, b = b, a
    bounds = _bounds(a)
    out = np.zeros(a.shape, dtype=np.complex128)
    for index in zip(*np.nonzero(a)):
        offsets = [int(i) - bd for i, bd in zip(index, bounds)]
        dst, src = _shift_slices(offsets, bounds)
        out[dst] += a[index] * b[src]
    return out


def _convolve_fft(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    full = tuple(2 * n - 1 for n in a.shape)
    product = np.fft.ifftn(np.fft.fftn(a, s=full) * np.fft.fftn(b, s=full))
    keep = tuple(slice(bd, 3 * bd + 1) for bd in _bounds(a))
    return product[keep]


def _with_time_axis(a: np.ndarray) -> np.ndarray:
    return a[..., None] if a.ndim == 3 else a


def _spatial_support(a4: np.ndarray) -> np.ndarray:
    return np.argwhere(np.any(a4 != 0, axis=3))


def _pair_work(a: np.ndarray, b: np.ndarray) -> int:
    a4, b4 = _with_time_axis(a), _with_time_axis(b)
    n1 = int(np.count_nonzero(np.any(a4 != 0, axis=3)))
    n2 = int(np.count_nonzero(np.any(b4 != 0, axis=3)))
    return n1 * n2 * (2 * a4.shape[3] - 1)


def _convolve_pairwise(a: np.ndarray, b: np.ndarray, eps: float = 0.0, drop_mean: bool = False) -> np.ndarray:
    """Sum over pairs of occupied spatial frequencies, time axis convolved by FFT."""
    spatial_only = a.ndim == 3
    a4, b4 = _with_time_axis(a), _with_time_axis(b)
    K, M, _, J = _bounds(a4)
    n_t = 2 * J + 1
    length = 2 * n_t - 1
    out = np.zeros(a4.shape, dtype=np.complex128)
    s1, s2 = _spatial_support(a4), _spatial_support(b4)
    if len(s1) and len(s2):
        offset = np.array([K, M, M])
        f1, f2 = s1 - offset, s2 - offset
        a_hat = np.fft.fft(a4[tuple(s1.T)], n=length, axis=-1)
        b_hat = np.fft.fft(b4[tuple(s2.T)], n=length, axis=-1)
        rows = max(1, PAIRWISE_CHUNK // max(1, len(s2) * length))
        for start in range(0, len(s1), rows):
            c1 = f1[start:start + rows]
            f = c1[:, None, :] + f2[None, :, :]
            valid = (
                (np.abs(f[..., 0]) <= K) & (np.abs(f[..., 1]) <= M) & (np.abs(f[..., 2]) <= M)
            )
            if drop_mean:
                valid &= f[..., 0] != 0
            if not valid.any():
                continue
            series = np.fft.ifft(a_hat[start:start + rows, None, :] * b_hat[None, :, :], axis=-1)[..., J:J + n_t]
            if eps > 0:
                v1 = c1[:, None, 0] * f2[None, :, 1] - f2[None, :, 0] * c1[:, None, 1]
                v2 = c1[:, None, 0] * f2[None, :, 2] - f2[None, :, 0] * c1[:, None, 2]
                series = series * ((1.0 + v1 * v1 + v2 * v2) ** (-eps / 2.0))[..., None]
            target = f[valid] + offset
            np.add.at(out, (target[:, 0], target[:, 1], target[:, 2]), series[valid])
    return out[..., 0] if spatial_only else out


def truncated_convolution(a: np.ndarray, b: np.ndarray, method: Method = "auto") -> np.ndarray:
    """
    Linear convolution of two centred coefficient arrays, truncated to their grid.

    Args:
        a, b: Arrays of identical odd shape
        method: "direct" summation, "pairwise" summation over occupied spatial
            frequencies, padded "fft", or "auto" (cheapest of the three)

    Returns:
        np.ndarray: out[f] = sum_{f1 + f2 = f} a[f1] b[f2] for f on the grid
    """
    if a.shape != b.shape:
        raise ShapeError(f"grid mismatch: {a.shape} vs {b.shape}")
    if method == "auto":
        if min(np.count_nonzero(a), np.count_nonzero(b)) <= DIRECT_MAX_TERMS:
            method = "direct"
        elif _pair_work(a, b) <= PAIRWISE_MAX_WORK:
            method = "pairwise"
        else:
            method = "fft"
    if method == "direct":
        return _convolve_direct(a, b)
    if method == "pairwise":
        return _convolve_pairwise(a, b)
    return _convolve_fft(a, b)


def _convolve(u: Spectrum, v: Spectrum, drop_mean: bool = True, method: Method = "auto") -> Spectrum:
    require_same_grid(u, v)
    out = u.replace(truncated_convolution(u.coeffs, v.coeffs, method))
    return project_mean_zero(out) if drop_mean else out


def bilinear_product(u: Spectrum, v: Spectrum, method: Method = "auto") -> Spectrum:
    """
    Spectrum of the product uv on the grid, k = 0 outputs dropped.

    Args:
        u, v: Spectra on the same grid
        method: Convolution path, see truncated_convolution

    Returns:
        The truncated mean-zero product

    Raises:
        ShapeError: On a grid mismatch
    """
    return _convolve(u, v, drop_mean=True, method=method)


def m_eps_apply(u: Spectrum, v: Spectrum, eps: float, method: Literal["auto", "pairwise", "dense"] = "auto") -> Spectrum:
    """
    M^-eps(u, v): the convolution weighted by <k1 eta - k eta1>^-eps, k != 0.

    Args:
        u, v: Spectra on the same grid
        eps: Exponent, eps >= 0
        method: Summation over occupied frequency "pairwise", a "dense" loop over
            the support of u with the whole of v, or "auto"

    Returns:
        The weighted product; eps = 0 gives bilinear_product

    Raises:
        ValueError: If eps < 0
        ShapeError: On a grid mismatch
    """
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    require_same_grid(u, v)
    if eps == 0:
        return bilinear_product(u, v)
    if method == "auto":
        method = "pairwise" if _pair_work(u.coeffs, v.coeffs) <= PAIRWISE_MAX_WORK else "dense"
    if method == "pairwise":
        return u.replace(_convolve_pairwise(u.coeffs, v.coeffs, eps=eps, drop_mean=True))

    a, b = u.coeffs, v.coeffs
    spatial_only = a.ndim == 3
    if spatial_only:
        a, b = a[..., None], b[..., None]
    K, M, _, J = _bounds(a)
    n_t = 2 * J + 1
    length = 2 * n_t - 1
    b_hat = np.fft.fft(b, n=length, axis=3)
    k2, e21, e22 = spatial_mesh(K, M)
    out = np.zeros(a.shape, dtype=np.complex128)

    support = np.argwhere(np.any(a != 0, axis=3))
    logger.debug(f"M^-eps over {len(support)} input frequencies")
    for i_k, i_1, i_2 in support:
        k1, e11, e12 = int(i_k) - K, int(i_1) - M, int(i_2) - M
        series = np.fft.ifft(b_hat * np.fft.fft(a[i_k, i_1, i_2], n=length), axis=3)[..., J:J + n_t]
        v1 = k1 * e21 - k2 * e11
        v2 = k1 * e22 - k2 * e12
        weight = (1.0 + v1 * v1 + v2 * v2) ** (-eps / 2.0)
        dst, src = _shift_slices((k1, e11, e12), (K, M, M))
        out[dst] += (weight[..., None] * series)[src]

    out[K] = 0.0
    if spatial_only:
        out = out[..., 0]
    return u.replace(out)


def dy_fractional(u: Spectrum, exponent: float) -> Spectrum:
    """Multiply by <eta>^exponent."""
    if exponent == 0:
        return u
    M = (u.coeffs.shape[1] - 1) // 2
    e = np.arange(-M, M + 1)
    w = (1.0 + e[:, None] ** 2 + e[None, :] ** 2) ** (exponent / 2.0)
    return u.replace(u.coeffs * w.reshape((1,) + w.shape + (1,) * (u.coeffs.ndim - 3)))


def _k_axis(u: Spectrum) -> np.ndarray:
    K = (u.coeffs.shape[0] - 1) // 2
    return np.arange(-K, K + 1).reshape((-1,) + (1,) * (u.coeffs.ndim - 1))


def dx(u: Spectrum) -> Spectrum:
    """partial_x: multiply by ik."""
    return u.replace(u.coeffs * (1j * _k_axis(u)))


def dx_abs(u: Spectrum, exponent: float) -> Spectrum:
    """D_x^a: multiply by |k|^a, zero at k = 0."""
    k = np.abs(_k_axis(u)).astype(float)
    w = np.where(k > 0, np.power(np.where(k > 0, k, 1.0), exponent), 0.0)
    return u.replace(u.coeffs * w)


# ---------------------------------------------------------------------------
# Free evolution
# ---------------------------------------------------------------------------


def phase_grid(K: int, M: int, disp: DispersionParams) -> np.ndarray:
    """phi(xi) on the spatial grid, 0 at k = 0."""
    k, e1, e2 = spatial_mesh(K, M)
    return phi_grid(k, e1, e2, disp)


def free_evolution_samples(u0: SpatialSpectrum, disp: DispersionParams, times: Sequence[float]) -> np.ndarray:
    """
    Coefficients e^{i t phi(xi)} u0-hat(xi) at each time.

    Returns:
        np.ndarray: Shape (len(times),) + u0 shape

    Raises:
        NonMeanZeroError: If u0 carries k = 0 mass
    """
    u0.require_mean_zero()
    phase = phase_grid(u0.K, u0.M, disp)
    t = np.asarray(times, dtype=float).reshape((-1, 1, 1, 1))
    return np.exp(1j * t * phase[None]) * u0.coeffs[None]


def free_evolution(u0: SpatialSpectrum, disp: DispersionParams, grid: GridSpec) -> SpaceTimeSpectrum:
    """
    Space-time spectrum of the free solution e^{it phi(D)} u0 on the time window.

    The solution is sampled at the 2J+1 centred window times (t = 0 at index 0)
    and transformed in time.

    Raises:
        NonMeanZeroError: If u0 carries k = 0 mass
        ShapeError: If u0 bounds differ from the grid
    """
    if (u0.K, u0.M) != (grid.K, grid.M):
        raise ShapeError(f"data bounds ({u0.K}, {u0.M}) differ from grid ({grid.K}, {grid.M})")
    n_t = 2 * grid.J + 1
    samples = free_evolution_samples(u0, disp, centred_times(grid, n_t))
    series = np.fft.fft(np.moveaxis(samples, 0, -1), axis=-1) / n_t
    index = np.arange(-grid.J, grid.J + 1) % n_t
    return SpaceTimeSpectrum(grid, series[..., index])


def schrodinger_flow(samples: np.ndarray, t: float) -> np.ndarray:
    """
    e^{i t Delta_y} applied to y-samples on T^2.

    Args:
        samples: Array of shape (N, N) sampled at y = 2 pi a / N
        t: Time

    Returns:
        np.ndarray: The evolved samples
    """
    n = samples.shape[0]
    eta = np.fft.fftfreq(n, d=1.0 / n)
    symbol = np.exp(-1j * t * (eta[:, None] ** 2 + eta[None, :] ** 2))
    return np.fft.ifft2(np.fft.fft2(samples) * symbol)


def _y_samples(coeffs: np.ndarray) -> np.ndarray:
    M = (coeffs.shape[0] - 1) // 2
    n = 2 * M + 1
    full = np.zeros((n, n), dtype=np.complex128)
    index = np.arange(-M, M + 1) % n
    full[np.ix_(index, index)] = coeffs
    return np.fft.ifft2(full) * full.size


def schrodinger_factorization_check(u0: SpatialSpectrum, k: int, t: float, disp: DispersionParams) -> float:
    """
    Max deviation between F_x e^{it phi} u0 (k, y) and e^{it phi0(k)} e^{i(t/k) Delta_y} F_x u0 (k, y).

    The left side rotates each coefficient by its full phase and synthesises;
    the right side evolves the synthesised k-slice with the 2D flow.

    Raises:
        NonMeanZeroError: If k = 0
        ShapeError: If |k| > K
    """
    if k == 0:
        raise NonMeanZeroError("the factorization holds on k != 0 slices only")
    if abs(k) > u0.K:
        raise ShapeError(f"k = {k} lies outside the grid bound {u0.K}")
    M = u0.M
    slice_hat = u0.coeffs[k + u0.K]
    e = np.arange(-M, M + 1)
    phase = phi_grid(np.full((1, 1), k), e[:, None], e[None, :], disp)
    lhs = _y_samples(np.exp(1j * t * phase) * slice_hat)
    rhs = np.exp(1j * t * phi0(k, disp)) * schrodinger_flow(_y_samples(slice_hat), t / k)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# Duality
# ---------------------------------------------------------------------------


def bilinear_adjoint(v: Spectrum, w: Spectrum) -> Spectrum:
    """
    Adjoint of u -> bilinear_product(u, v) applied to w.

    A(v, w)(xi1) = sum_xi2 w(xi1 + xi2) conj(v(xi2)), with the k = 0 part of w
    removed, so that <bilinear_product(u, v), w> = <u, A(v, w)>.
    """
    return _convolve(project_mean_zero(w), conjugate(v), drop_mean=False)


@dataclass(frozen=True)
class PairingReport:
    product_side: complex
    adjoint_side_u: complex
    adjoint_side_v: complex
    relative_error: float


def duality_pairing_check(u: Spectrum, v: Spectrum, w: Spectrum, eps0: float = 0.0) -> PairingReport:
    """
    Compare <D_y^-eps0 (uv), w> with <u, A(v, D_y^-eps0 w)> and <v, A(u, D_y^-eps0 w)>.

    Returns:
        PairingReport: The three pairings and the largest relative disagreement
    """
    lhs = inner_product(dy_fractional(bilinear_product(u, v), -eps0), w)
    dw = dy_fractional(w, -eps0)
    via_u = inner_product(u, bilinear_adjoint(v, dw))
    via_v = inner_product(v, bilinear_adjoint(u, dw))
    scale = max(abs(lhs), 1e-300)
    error = max(abs(lhs - via_u), abs(lhs - via_v)) / scale
    return PairingReport(product_side=lhs, adjoint_side_u=via_u, adjoint_side_v=via_v, relative_error=error)
