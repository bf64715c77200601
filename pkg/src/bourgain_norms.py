"""
Fourier restriction norms on truncated spectra.

All weights are products of a k-weight (|k|^s or <k>^s), <eta>^eps,
<sigma>^b and the beta factor (1 + <sigma> / <k>^(alpha+1))^beta, with
<x> = sqrt(1 + |x|^2).
"""

import logging
from typing import Iterable, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import NonMeanZeroError
from src.fourier_field import GridSpec, SpaceTimeSpectrum, SpatialSpectrum, spatial_mesh
from src.phase_resonance import DispersionParams, sigma_grid

logger = logging.getLogger(__name__)

KWeight = Literal["homogeneous", "bracket"]


class NormParams(BaseModel):
    """Exponents (s, eps, b, beta), the dispersion and the k-weight convention."""

    model_config = ConfigDict(frozen=True)

    s: float = 0.0
    eps: float = 0.0
    b: float = 0.0
    beta: float = Field(0.0, ge=0.0)
    disp: DispersionParams = DispersionParams()
    k_weight: KWeight = "homogeneous"

    def with_(self, **changes) -> "NormParams":
        return self.model_copy(update=changes)


def bracket(x: np.ndarray) -> np.ndarray:
    """<x> = sqrt(1 + |x|^2)."""
    return np.sqrt(1.0 + np.abs(x) ** 2)


def sigma_mesh(grid: GridSpec, disp: DispersionParams) -> np.ndarray:
    """sigma_j = tau_j - phi(xi) over the whole grid (tau_j at k = 0)."""
    k, e1, e2, _ = grid.mesh()
    return sigma_grid(grid.tau_mesh(), k, e1, e2, disp)


def k_weight(ks: np.ndarray, s: float, convention: KWeight) -> np.ndarray:
    """|k|^s (0 at k = 0) or <k>^s."""
    kf = np.abs(ks).astype(float)
    if convention == "bracket":
        return bracket(kf) ** s
    return np.where(ks != 0, np.power(np.where(ks != 0, kf, 1.0), s), 0.0)


def weight_grid(grid: GridSpec, params: NormParams) -> np.ndarray:
    """
    Per-mode weight of the X_{s,eps,b;beta} norm on the full grid.

    Under the homogeneous convention the k = 0 weight is 0; callers reject
    spectra that carry mass there.

    Args:
        grid: The lattice
        params: Norm exponents

    Returns:
        np.ndarray: Weights of shape grid.shape
    """
    k, e1, e2, _ = grid.mesh()
    sig = bracket(sigma_mesh(grid, params.disp))
    w = k_weight(k, params.s, params.k_weight) * bracket(np.hypot(e1, e2)) ** params.eps * sig ** params.b
    if params.beta:
        w = w * (1.0 + sig / bracket(k) ** (params.disp.alpha + 1.0)) ** params.beta
    return w


def weight_table(grid: GridSpec, params: NormParams) -> Iterable[Tuple[int, int, int, int, float]]:
    """Rows (k, eta1, eta2, j, weight) for CSV dumps."""
    w = weight_grid(grid, params)
    for index in np.ndindex(*grid.shape):
        k, e1, e2, j = index
        yield (k - grid.K, e1 - grid.M, e2 - grid.M, j - grid.J, float(w[index]))


def _require_mean_zero(u: SpaceTimeSpectrum, params: NormParams) -> None:
    if params.k_weight == "homogeneous" and u.mean_mass() != 0.0:
        raise NonMeanZeroError(
            f"homogeneous k-weight needs a mean-zero spectrum, k = 0 mass is {u.mean_mass():.3e}"
        )


def _weighted(u: SpaceTimeSpectrum, params: NormParams) -> np.ndarray:
    _require_mean_zero(u, params)
    return weight_grid(u.grid, params) * np.abs(u.coeffs)


def xsb_norm(u: SpaceTimeSpectrum, params: NormParams) -> float:
    """
    ||u||_{X_{s,eps,b;beta}}; beta = 0 gives X_{s,eps,b}.

    Raises:
        NonMeanZeroError: k = 0 mass under the homogeneous k-weight
    """
    return float(np.linalg.norm(_weighted(u, params).ravel()))


def y_norm(u: SpaceTimeSpectrum, params: NormParams) -> float:
    """
    ||u||_{Y_{s,eps;beta}}: l^1 over tau_j with <sigma>^-1, then l^2 over xi.

    The b of params is ignored. Each tau_j carries unit weight.
    """
    per_xi = _weighted(u, params.with_(b=-1.0)).sum(axis=3)
    return float(np.linalg.norm(per_xi.ravel()))


def z_norm(u: SpaceTimeSpectrum, params: NormParams) -> float:
    """||u||_Z = ||u||_Y + ||u||_{X_{s,eps,-1/2;beta}}."""
    return y_norm(u, params) + xsb_norm(u, params.with_(b=-0.5))


def mixed_norm(u: SpaceTimeSpectrum, params: NormParams, p_tau: float) -> float:
    """
    L^2_xi L^p_tau norm of the weighted spectrum, 1 <= p_tau <= 2.

    Raises:
        ValueError: If p_tau lies outside [1, 2]
    """
    if not 1.0 <= p_tau <= 2.0:
        raise ValueError(f"p_tau must lie in [1, 2], got {p_tau}")
    weighted = _weighted(u, params)
    per_xi = np.sum(weighted ** p_tau, axis=3) ** (1.0 / p_tau)
    return float(np.linalg.norm(per_xi.ravel()))


def lambda_b(u: SpaceTimeSpectrum, b: float, disp: DispersionParams) -> SpaceTimeSpectrum:
    """Lambda^b: multiply each coefficient by <sigma>^b."""
    if b == 0:
        return u
    return u.replace(u.coeffs * bracket(sigma_mesh(u.grid, disp)) ** b)


def sobolev_norm(u: SpatialSpectrum, s: float, eps: float = 0.0, convention: KWeight = "homogeneous") -> float:
    """
    Discrete H^s_x H^eps_y norm of spatial data.

    Raises:
        NonMeanZeroError: k = 0 mass under the homogeneous k-weight
    """
    if convention == "homogeneous" and u.mean_mass() != 0.0:
        raise NonMeanZeroError("homogeneous Sobolev weight needs mean-zero data")
    k, e1, e2 = spatial_mesh(u.K, u.M)
    w = k_weight(k, s, convention) * bracket(np.hypot(e1, e2)) ** eps
    return float(np.linalg.norm((w * np.abs(u.coeffs)).ravel()))


def norm_family(u: SpaceTimeSpectrum, params: NormParams, p_tau: float = 2.0) -> List[Tuple[str, float]]:
    """All norms of u at one parameter set, for reports."""
    return [
        ("xsb", xsb_norm(u, params)),
        ("xsb_unweighted", xsb_norm(u, params.with_(beta=0.0))),
        ("y", y_norm(u, params)),
        ("z", z_norm(u, params)),
        ("mixed", mixed_norm(u, params, p_tau)),
    ]
