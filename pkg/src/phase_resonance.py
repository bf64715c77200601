"""
Phase function, modulation weights and the resonance decomposition.

phi(xi) = phi0(k) - |eta|^2 / k with phi0(k) = |k|^alpha k, and for an
interaction xi = xi1 + xi2

    sigma1 + sigma2 - sigma = r(k, k1) + |k eta1 - k1 eta|^2 / (k k1 k2)

with r(k, k1) = phi0(k) - phi0(k1) - phi0(k2).
"""

import logging
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.errors import ResonantInteractionError
from src.fourier_field import FreqPoint

logger = logging.getLogger(__name__)

Number = Union[int, float]


class DispersionParams(BaseModel):
    """Dispersion exponent alpha >= 2 and an optional odd phi0 table."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(2.0, ge=2.0)
    phi0_table: Optional[Dict[int, float]] = None

    @field_validator("phi0_table")
    @classmethod
    def _odd_table(cls, table: Optional[Dict[int, float]]) -> Optional[Dict[int, float]]:
        if table is None:
            return None
        if 0 in table:
            raise ValueError("phi0 table must not define k = 0")
        for k, value in table.items():
            if -k in table and table[-k] != -value:
                raise ValueError(f"phi0 table is not odd at k = {k}")
        return table

    @property
    def exact(self) -> bool:
        """True when phi0 is an integer polynomial (alpha an even integer)."""
        return self.phi0_table is None and float(self.alpha).is_integer() and int(self.alpha) % 2 == 0


class ResonanceSplit(BaseModel):
    """The two terms of the resonance relation and their sum."""

    model_config = ConfigDict(frozen=True)

    r_term: float
    mixed_term: float
    total: float


class MagnitudeReport(BaseModel):
    """Measured bracket of |r(k, k1)| / (|k_max|^alpha |k_min|)."""

    alpha: float
    samples: int
    ratio_min: float
    ratio_max: float


class MaxSigmaBound(BaseModel):
    max_sigma: float
    bound: float
    total: float
    holds: bool


def phi0(k: int, p: DispersionParams) -> Number:
    """
    phi0(k) = |k|^alpha k, exact integer for even integer alpha.

    Args:
        k: Non-zero x-frequency
        p: Dispersion parameters

    Returns:
        The phase value

    Raises:
        ResonantInteractionError: If k = 0
    """
    if k == 0:
        raise ResonantInteractionError("phi0 is evaluated on the mean-zero sector only (k != 0)")
    if p.phi0_table is not None:
        if k in p.phi0_table:
            return p.phi0_table[k]
        if -k in p.phi0_table:
            return -p.phi0_table[-k]
        raise KeyError(f"phi0 table has no entry for k = {k}")
    if p.exact:
        return abs(k) ** int(p.alpha) * k
    return abs(k) ** p.alpha * k


def phi(xi: FreqPoint, p: DispersionParams) -> float:
    """phi(xi) = phi0(k) - |eta|^2 / k."""
    xi.require_mean_zero()
    return phi0(xi.k, p) - xi.eta_sq / xi.k


def sigma(tau: float, xi: FreqPoint, p: DispersionParams) -> float:
    """Modulation sigma = tau - phi(xi)."""
    return tau - phi(xi, p)


def phi0_array(ks: np.ndarray, p: DispersionParams) -> np.ndarray:
    """Vectorised phi0 with the value 0 at k = 0."""
    ks = np.asarray(ks)
    if p.phi0_table is not None:
        out = np.zeros(ks.shape, dtype=float)
        for index, k in np.ndenumerate(ks):
            if k != 0:
                out[index] = phi0(int(k), p)
        return out
    kf = ks.astype(float)
    return np.abs(kf) ** p.alpha * kf


def phi_grid(ks: np.ndarray, eta1: np.ndarray, eta2: np.ndarray, p: DispersionParams) -> np.ndarray:
    """
    Broadcast phi(k, eta) over arrays; k = 0 entries are set to 0.

    Args:
        ks, eta1, eta2: Broadcastable integer arrays
        p: Dispersion parameters

    Returns:
        np.ndarray: phi values
    """
    ks, eta1, eta2 = np.broadcast_arrays(ks, eta1, eta2)
    kf = ks.astype(float)
    eta_sq = eta1.astype(float) ** 2 + eta2.astype(float) ** 2
    transverse = np.divide(eta_sq, kf, out=np.zeros_like(kf), where=ks != 0)
    return np.where(ks != 0, phi0_array(ks, p) - transverse, 0.0)


def sigma_grid(
    taus: np.ndarray, ks: np.ndarray, eta1: np.ndarray, eta2: np.ndarray, p: DispersionParams
) -> np.ndarray:
    """Broadcast sigma = tau - phi(xi); at k = 0 sigma is tau."""
    return np.asarray(taus, dtype=float) - phi_grid(ks, eta1, eta2, p)


def _r_term(k: int, k1: int, p: DispersionParams) -> Number:
    k2 = k - k1
    return phi0(k, p) - phi0(k1, p) - phi0(k2, p)


def r_term_value(k1: int, k2: int, p: DispersionParams) -> Number:
    """r(k, k1) for k = k1 + k2; an exact int for even integer alpha."""
    k = k1 + k2
    if 0 in (k, k1, k2):
        raise ResonantInteractionError(f"resonant null interaction (k1, k2) = ({k1}, {k2})")
    return _r_term(k, k1, p)


def _mixed_numerator(xi1: FreqPoint, xi: FreqPoint) -> int:
    v1 = xi.k * xi1.eta[0] - xi1.k * xi.eta[0]
    v2 = xi.k * xi1.eta[1] - xi1.k * xi.eta[1]
    return v1 * v1 + v2 * v2


def resonance_decomposition(xi1: FreqPoint, xi2: FreqPoint, p: DispersionParams) -> ResonanceSplit:
    """
    Split sigma1 + sigma2 - sigma into the dispersive and mixed terms.

    Args:
        xi1, xi2: Interacting frequencies; xi = xi1 + xi2
        p: Dispersion parameters

    Returns:
        ResonanceSplit: r_term, mixed_term and their sum

    Raises:
        ResonantInteractionError: If k, k1 or k2 vanishes
    """
    xi = xi1 + xi2
    if 0 in (xi.k, xi1.k, xi2.k):
        raise ResonantInteractionError(
            f"resonant null interaction: k1={xi1.k}, k2={xi2.k}, k={xi.k}"
        )
    r_value = float(_r_term(xi.k, xi1.k, p))
    mixed = _mixed_numerator(xi1, xi) / (xi.k * xi1.k * xi2.k)
    return ResonanceSplit(r_term=r_value, mixed_term=mixed, total=r_value + mixed)


def r_term_magnitude_check(
    sample: Iterable[Tuple[int, int]], p: DispersionParams
) -> MagnitudeReport:
    """
    Measure |r(k, k1)| / (|k_max|^alpha |k_min|) over a sample of (k1, k2).

    Pairs with k1 + k2 = 0 or a zero entry are skipped.

    Args:
        sample: Pairs (k1, k2)
        p: Dispersion parameters

    Returns:
        MagnitudeReport: Observed minimum and maximum ratio
    """
    ratios = []
    for k1, k2 in sample:
        k = k1 + k2
        if 0 in (k, k1, k2):
            continue
        sizes = (abs(k), abs(k1), abs(k2))
        ratios.append(abs(float(_r_term(k, k1, p))) / (max(sizes) ** p.alpha * min(sizes)))
    if not ratios:
        raise ValueError("sample contains no admissible pairs")
    report = MagnitudeReport(
        alpha=p.alpha, samples=len(ratios), ratio_min=min(ratios), ratio_max=max(ratios)
    )
    logger.debug(f"r-term bracket alpha={p.alpha}: [{report.ratio_min:.4f}, {report.ratio_max:.4f}]")
    return report


def max_sigma_lower_bound(
    xi1: FreqPoint, xi2: FreqPoint, tau1: float, tau2: float, p: DispersionParams
) -> MaxSigmaBound:
    """
    Compare max(|sigma|, |sigma1|, |sigma2|) with the resonance lower bound.

    Returns:
        MaxSigmaBound: the maximum, the bound
        (|k_min| |k_max|^alpha + |k eta1 - k1 eta|^2 / |k k1 k2|) / 3 and whether
        max >= |total| / 3
    """
    split = resonance_decomposition(xi1, xi2, p)
    xi = xi1 + xi2
    s1 = sigma(tau1, xi1, p)
    s2 = sigma(tau2, xi2, p)
    s = sigma(tau1 + tau2, xi, p)
    largest = max(abs(s), abs(s1), abs(s2))
    sizes = (abs(xi.k), abs(xi1.k), abs(xi2.k))
    bound = (
        min(sizes) * max(sizes) ** p.alpha
        + _mixed_numerator(xi1, xi) / abs(xi.k * xi1.k * xi2.k)
    ) / 3.0
    # sigma1 + sigma2 - sigma = total, so one of the three carries a third of it
    scale = abs(s) + abs(s1) + abs(s2)
    holds = largest >= abs(split.total) / 3.0 - 1e-12 * max(scale, 1.0)
    return MaxSigmaBound(max_sigma=largest, bound=bound, total=split.total, holds=holds)


class IdentitySweepReport(BaseModel):
    alpha: float
    pairs: int
    max_relative_deviation: float
    exact_r_term_failures: int
    same_sign_failures: int
    magnitude: MagnitudeReport
    rows: List[Tuple[int, int, int, int, int, int, float, float, float]] = []


def resonance_identity_sweep(
    k_max: int,
    eta_max: int,
    p: DispersionParams,
    eta_samples: int = 4,
    n_tau: int = 10,
    seed: int = 0,
    keep_rows: bool = False,
) -> IdentitySweepReport:
    """
    Check the resonance relation over all (k1, k2) with |k_i| <= k_max.

    eta pairs are sampled uniformly from [-eta_max, eta_max]^2 (the full eta
    range is enumerated instead when it has at most eta_samples points per
    factor); each interaction is evaluated at n_tau random (tau1, tau2).

    Args:
        k_max: Bound on |k1|, |k2|
        eta_max: Bound on the eta components
        p: Dispersion parameters
        eta_samples: eta pairs per k pair
        n_tau: tau pairs per interaction
        seed: Random seed
        keep_rows: Collect (k1, k2, eta1, eta2, alpha, r, mixed) rows for CSV dumps

    Returns:
        IdentitySweepReport: Maximum relative deviation and property failures
    """
    rng = np.random.default_rng(seed)
    ks = np.arange(-k_max, k_max + 1)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    k = k1 + k2
    admissible = (k1 != 0) & (k2 != 0) & (k != 0)
    k1, k2, k = k1[admissible], k2[admissible], k[admissible]
    n_pairs = k1.size

    side = 2 * eta_max + 1
    if side ** 4 <= eta_samples:
        grid = np.arange(-eta_max, eta_max + 1)
        e = np.array(np.meshgrid(grid, grid, grid, grid, indexing="ij")).reshape(4, -1).T
        etas = np.broadcast_to(e, (n_pairs,) + e.shape)
    else:
        etas = rng.integers(-eta_max, eta_max + 1, size=(n_pairs, eta_samples, 4))
    n_eta = etas.shape[1]

    kk1 = np.repeat(k1, n_eta).astype(np.int64)
    kk2 = np.repeat(k2, n_eta).astype(np.int64)
    kk = kk1 + kk2
    e = etas.reshape(-1, 4).astype(np.int64)
    a1, a2, b1, b2 = e[:, 0], e[:, 1], e[:, 2], e[:, 3]
    c1, c2 = a1 + b1, a2 + b2

    r_float = phi0_array(kk, p) - phi0_array(kk1, p) - phi0_array(kk2, p)
    v1 = kk * a1 - kk1 * c1
    v2 = kk * a2 - kk1 * c2
    mixed = (v1 * v1 + v2 * v2) / (kk * kk1 * kk2).astype(float)
    total = r_float + mixed

    phi_1 = phi_grid(kk1, a1, a2, p)
    phi_2 = phi_grid(kk2, b1, b2, p)
    phi_s = phi_grid(kk, c1, c2, p)
    scale_tau = max(1.0, float(np.max(np.abs(phi_s))))
    worst = 0.0
    for _ in range(n_tau):
        tau1 = rng.uniform(-scale_tau, scale_tau, size=total.size)
        tau2 = rng.uniform(-scale_tau, scale_tau, size=total.size)
        s1 = tau1 - phi_1
        s2 = tau2 - phi_2
        s = (tau1 + tau2) - phi_s
        lhs = s1 + s2 - s
        scale = np.maximum(np.abs(s1) + np.abs(s2) + np.abs(s) + np.abs(total), 1.0)
        worst = max(worst, float(np.max(np.abs(lhs - total) / scale)))

    exact_failures = 0
    if p.exact and int(p.alpha) == 2:
        for a, b in zip(k1.tolist(), k2.tolist()):
            if r_term_value(a, b, p) != 3 * (a + b) * a * b:
                exact_failures += 1

    nonzero_mixed = mixed != 0
    same_sign_failures = int(
        np.count_nonzero(nonzero_mixed & (np.sign(r_float) != np.sign(mixed)))
        + np.count_nonzero(np.sign(r_float) != np.sign(kk * kk1 * kk2))
    )

    magnitude = r_term_magnitude_check(zip(k1.tolist(), k2.tolist()), p)
    rows = []
    if keep_rows:
        first = np.arange(0, kk.size, n_eta)
        for i in first.tolist():
            rows.append(
                (
                    int(kk1[i]), int(kk2[i]), int(a1[i]), int(a2[i]), int(b1[i]), int(b2[i]),
                    float(p.alpha), float(r_float[i]), float(mixed[i]),
                )
            )

    logger.info(
        f"Resonance sweep alpha={p.alpha}: {n_pairs} k pairs x {n_eta} eta pairs, "
        f"max relative deviation {worst:.2e}"
    )
    return IdentitySweepReport(
        alpha=p.alpha,
        pairs=int(total.size),
        max_relative_deviation=worst,
        exact_r_term_failures=exact_failures,
        same_sign_failures=same_sign_failures,
        magnitude=magnitude,
        rows=rows,
    )
