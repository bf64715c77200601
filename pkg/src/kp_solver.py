"""
Pseudospectral Cauchy solver for the dispersion-generalised KP-II equation

    u_t - i phi0(D_x) u + d_x^-1 Lap_y u + u u_x = 0

on the torus, mode-wise u-hat' = i phi(xi) u-hat - (ik/2) (u * u)-hat.

The solver state never stores k = 0: the mean-zero sector is the only one on
which d_x^-1 exists. Products are dealiased by the 2/3 rule on k and on both
eta components.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.bilinear_ops import phase_grid, truncated_convolution
from src.bourgain_norms import NormParams, k_weight, bracket, xsb_norm
from src.errors import NonMeanZeroError, PicardDivergenceError, SolverInstabilityError, StabilityError
from src.fourier_field import (
    GridSpec,
    SpaceTimeSpectrum,
    SpatialSpectrum,
    bump,
    centred_times,
    embed_spatial,
    is_real,
    spatial_mesh,
)
from src.phase_resonance import DispersionParams

logger = logging.getLogger(__name__)

Scheme = Literal["integrating_factor_rk4", "etdrk4"]

# Imaginary-axis stability limit of classical RK4 is 2 sqrt(2); keep a margin
RK4_STABILITY = 2.8
# Ratios above this abort the Picard iteration
PICARD_DIVERGENCE = 10.0
# Below this |h L| the ETDRK4 coefficients come from contour averaging
CONTOUR_THRESHOLD = 0.5
# Convergence errors below this are roundoff and say nothing about the order
ROUNDOFF_ERROR = 1e-12


class SolverConfig(BaseModel):
    """Dispersion, spatial truncation and time stepping of one run."""

    model_config = ConfigDict(frozen=True)

    disp: DispersionParams = DispersionParams()
    K: int = Field(16, ge=1)
    M: int = Field(16, ge=1)
    dt: float = Field(1e-3, gt=0.0)
    t_end: float = Field(1.0, gt=0.0)
    scheme: Scheme = "integrating_factor_rk4"
    dealias: float = 2.0 / 3.0
    picard_depth: int = Field(0, ge=0)
    nonlinear: bool = True
    save_every: int = Field(100, ge=1)
    contour_points: int = Field(32, ge=4)

    @field_validator("dealias")
    @classmethod
    def _fraction(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError(f"dealias must lie in (0, 1], got {value}")
        return value

    @property
    def dealias_bounds(self) -> Tuple[int, int]:
        return max(1, int(math.floor(self.dealias * self.K))), int(math.floor(self.dealias * self.M))

    @property
    def alias_free(self) -> bool:
        """Whether a periodic product on the native (2K+1, 2M+1, 2M+1) grid is exact on the mask."""
        kd, md = self.dealias_bounds
        return 3 * kd <= 2 * self.K and 3 * md <= 2 * self.M

    def steps(self) -> Tuple[int, float]:
        """Number of steps to t_end and the step length actually used."""
        n = max(1, int(round(self.t_end / self.dt)))
        return n, self.t_end / n


# ---------------------------------------------------------------------------
# Packed state: the k = 0 row is never stored
# ---------------------------------------------------------------------------


def _pack(coeffs: np.ndarray, K: int) -> np.ndarray:
    return np.delete(coeffs, K, axis=0)


def _unpack(packed: np.ndarray, K: int) -> np.ndarray:
    return np.insert(packed, K, 0.0, axis=0)


def _dealias_mask(cfg: SolverConfig) -> np.ndarray:
    kd, md = cfg.dealias_bounds
    k, e1, e2 = spatial_mesh(cfg.K, cfg.M)
    return (np.abs(k) <= kd) & (np.abs(e1) <= md) & (np.abs(e2) <= md)


@dataclass
class _Operators:
    cfg: SolverConfig
    mask: np.ndarray
    ik_half: np.ndarray
    L: np.ndarray

    @classmethod
    def build(cls, cfg: SolverConfig) -> "_Operators":
        k = spatial_mesh(cfg.K, cfg.M)[0]
        mask = _dealias_mask(cfg)
        L = _pack(1j * phase_grid(cfg.K, cfg.M, cfg.disp), cfg.K)
        return cls(cfg, mask, 0.5j * k, L)

    def nonlinear(self, packed: np.ndarray) -> np.ndarray:
        if not self.cfg.nonlinear:
            return np.zeros_like(packed)
        u = _unpack(packed, self.cfg.K) * self.mask
        product = periodic_square(u) if self.cfg.alias_free else truncated_convolution(u, u)
        return _pack(-self.ik_half * self.mask * product, self.cfg.K)


def periodic_square(coeffs: np.ndarray) -> np.ndarray:
    """
    Coefficients of u^2 on the native grid, wrapping frequencies periodically.

    Agrees with the truncated convolution on every mode of the 2/3 mask when
    the input is supported on that mask.
    """
    size = coeffs.size
    samples = np.fft.ifftn(np.fft.ifftshift(coeffs)) * size
    return np.fft.fftshift(np.fft.fftn(samples * samples)) / size


def _check_data(u: SpatialSpectrum, cfg: SolverConfig) -> None:
    if (u.K, u.M) != (cfg.K, cfg.M):
        raise ValueError(f"data bounds ({u.K}, {u.M}) differ from solver bounds ({cfg.K}, {cfg.M})")
    u.require_mean_zero()


def rhs_nonlinear(u: SpatialSpectrum, cfg: SolverConfig) -> SpatialSpectrum:
    """
    The dealiased quadratic term -(ik/2) (u * u)-hat.

    Raises:
        NonMeanZeroError: If u carries k = 0 mass
    """
    _check_data(u, cfg)
    ops = _Operators.build(cfg.model_copy(update={"nonlinear": True}))
    return u.replace(_unpack(ops.nonlinear(_pack(u.coeffs, cfg.K)), cfg.K))


# ---------------------------------------------------------------------------
# Integrators
# ---------------------------------------------------------------------------


@dataclass
class _Stepper:
    ops: _Operators
    h: float
    scheme: Scheme
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        z = self.h * self.ops.L
        self.coeffs["E"] = np.exp(z)
        self.coeffs["E2"] = np.exp(z / 2.0)
        if self.scheme == "etdrk4":
            self.coeffs.update(etdrk4_coefficients(z, self.h, self.ops.cfg.contour_points))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        N = self.ops.nonlinear
        h, E, E2 = self.h, self.coeffs["E"], self.coeffs["E2"]
        if self.scheme == "integrating_factor_rk4":
            a = N(u)
            b = N(E2 * (u + 0.5 * h * a))
            c = N(E2 * u + 0.5 * h * b)
            d = N(E * u + h * E2 * c)
            return E * u + (h / 6.0) * (E * a + 2.0 * E2 * (b + c) + d)
        Q, f1, f2, f3 = (self.coeffs[key] for key in ("Q", "f1", "f2", "f3"))
        Nu = N(u)
        a = E2 * u + Q * Nu
        Na = N(a)
        b = E2 * u + Q * Na
        Nb = N(b)
        c = E2 * a + Q * (2.0 * Nb - Nu)
        Nc = N(c)
        return E * u + f1 * Nu + 2.0 * f2 * (Na + Nb) + f3 * Nc


def etdrk4_coefficients(z: np.ndarray, h: float, points: int = 32) -> dict:
    """
    ETDRK4 coefficients Q, f1, f2, f3 for z = h L.

    Entries with |z| < CONTOUR_THRESHOLD are averaged over a unit circle of
    points around z; the rest use the closed forms directly.
    """
    z = np.asarray(z, dtype=np.complex128)
    small = np.abs(z) < CONTOUR_THRESHOLD
    safe = np.where(small, 1.0, z)

    def closed(w):
        ew = np.exp(w)
        return {
            "Q": h * (np.exp(w / 2.0) - 1.0) / w,
            "f1": h * (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w ** 3,
            "f2": h * (2.0 + w + ew * (w - 2.0)) / w ** 3,
            "f3": h * (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w ** 3,
        }

    out = closed(safe)
    if np.any(small):
        circle = np.exp(2j * math.pi * (np.arange(points) + 0.5) / points)
        contour = closed(z[small][:, None] + circle[None, :])
        for key, values in contour.items():
            out[key][small] = values.mean(axis=1)
    return out


class PreflightReport(BaseModel):
    dt: float
    bound: float
    max_phase_step: float
    ok: bool


def preflight(u0: SpatialSpectrum, cfg: SolverConfig) -> PreflightReport:
    """
    Stability estimate dt <= 2.8 / (K_dealias * sum |u-hat|).

    The linear part is integrated exactly; the bound controls the explicit
    treatment of the nonlinear term. Zero data has an infinite bound.
    """
    kd, _ = cfg.dealias_bounds
    mass = float(np.sum(np.abs(u0.coeffs)))
    bound = math.inf if mass == 0 or not cfg.nonlinear else RK4_STABILITY / (kd * mass)
    max_phase = float(np.max(np.abs(phase_grid(cfg.K, cfg.M, cfg.disp)))) * cfg.dt
    return PreflightReport(dt=cfg.dt, bound=bound, max_phase_step=max_phase, ok=cfg.dt <= bound)


def _require_stable(u0: SpatialSpectrum, cfg: SolverConfig) -> PreflightReport:
    report = preflight(u0, cfg)
    if not report.ok:
        raise StabilityError(f"dt = {cfg.dt} exceeds the preflight bound {report.bound:.3e}")
    return report


def step(u: SpatialSpectrum, cfg: SolverConfig) -> SpatialSpectrum:
    """
    Advance u by one step of length cfg.dt.

    Raises:
        StabilityError: If dt exceeds the preflight bound
        SolverInstabilityError: On a non-finite result
    """
    _check_data(u, cfg)
    _require_stable(u, cfg)
    stepper = _Stepper(_Operators.build(cfg), cfg.dt, cfg.scheme)
    out = stepper(_pack(u.coeffs, cfg.K))
    if not np.all(np.isfinite(out)):
        raise SolverInstabilityError(1)
    return u.replace(_unpack(out, cfg.K))


def _march(u0: SpatialSpectrum, cfg: SolverConfig) -> Iterator[Tuple[int, float, np.ndarray]]:
    """Yield (step, time, packed state), starting with step 0."""
    n, h = cfg.steps()
    stepper = _Stepper(_Operators.build(cfg), h, cfg.scheme)
    u = _pack(u0.coeffs, cfg.K)
    yield 0, 0.0, u
    for i in range(1, n + 1):
        u = stepper(u)
        if not np.all(np.isfinite(u)):
            raise SolverInstabilityError(i)
        yield i, i * h, u


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


def _energy_weights(cfg: SolverConfig) -> np.ndarray:
    k, e1, e2 = spatial_mesh(cfg.K, cfg.M)
    kf = np.abs(k).astype(float)
    safe = np.where(kf > 0, kf, 1.0)
    return _pack(np.where(kf > 0, kf ** cfg.disp.alpha - (e1 * e1 + e2 * e2) / safe ** 2, 0.0), cfg.K)


def energy_proxy(u: SpatialSpectrum, disp: DispersionParams) -> float:
    """Quadratic part of the Hamiltonian: 1/2 sum (|k|^alpha - |eta|^2 / k^2) |u-hat|^2."""
    cfg = SolverConfig(disp=disp, K=u.K, M=u.M)
    return 0.5 * float(np.sum(_energy_weights(cfg) * np.abs(_pack(u.coeffs, u.K)) ** 2))


@dataclass(eq=False)
class Trajectory:
    """Saved states plus per-step diagnostics."""

    times: List[float]
    states: List[SpatialSpectrum]
    step_times: np.ndarray
    l2: np.ndarray
    energy: np.ndarray
    max_mode: np.ndarray

    def drift(self) -> np.ndarray:
        """Relative L^2 drift per step; zero data has zero drift."""
        if self.l2[0] == 0:
            return np.zeros_like(self.l2)
        return np.abs(self.l2 - self.l2[0]) / self.l2[0]

    def diagnostics_rows(self) -> List[Tuple[float, float, float, float, float]]:
        """Rows (t, l2, drift, energy, max_mode)."""
        drift = self.drift()
        return [
            (float(t), float(a), float(d), float(e), float(m))
            for t, a, d, e, m in zip(self.step_times, self.l2, drift, self.energy, self.max_mode)
        ]


def solve_cauchy(u0: SpatialSpectrum, cfg: SolverConfig) -> Trajectory:
    """
    Integrate from u0 to cfg.t_end.

    Args:
        u0: Real mean-zero data on the solver bounds
        cfg: Solver configuration

    Returns:
        Trajectory: States every cfg.save_every steps and at t_end, with
            L^2, energy proxy and max |u-hat| after every step

    Raises:
        NonMeanZeroError: If u0 carries k = 0 mass
        ValueError: If u0 is not real
        StabilityError: If dt exceeds the preflight bound
        SolverInstabilityError: On a non-finite state, with its step index
    """
    _check_data(u0, cfg)
    if not is_real(u0):
        raise ValueError("initial data must be real (conjugate-symmetric)")
    _require_stable(u0, cfg)
    n, h = cfg.steps()
    weights = _energy_weights(cfg)
    l2, energy, max_mode = np.zeros(n + 1), np.zeros(n + 1), np.zeros(n + 1)
    times, states = [], []
    logger.info(f"Solving to t={cfg.t_end} in {n} steps of {h:.3e} ({cfg.scheme}, K={cfg.K}, M={cfg.M})")
    for i, t, u in _march(u0, cfg):
        modulus = np.abs(u)
        l2[i] = math.sqrt(float(np.sum(modulus ** 2)))
        energy[i] = 0.5 * float(np.sum(weights * modulus ** 2))
        max_mode[i] = float(modulus.max(initial=0.0))
        if i % cfg.save_every == 0 or i == n:
            times.append(t)
            states.append(u0.replace(_unpack(u, cfg.K)))
    trajectory = Trajectory(times, states, np.arange(n + 1) * h, l2, energy, max_mode)
    logger.info(f"Finished: max relative L2 drift {l2_drift(trajectory):.3e}")
    return trajectory


def l2_drift(traj: Trajectory) -> float:
    """max_t | ||u(t)|| - ||u0|| | / ||u0||, 0 for zero data."""
    return float(np.max(traj.drift()))


def cosine_data(
    K: int, M: int, amplitude: float, modes: Sequence[Tuple[int, int, int]] = ((1, 0, 0), (1, 1, 0))
) -> SpatialSpectrum:
    """
    Real data amplitude * sum cos(k x + eta . y) over the given modes.

    Raises:
        NonMeanZeroError: If a mode has k = 0
    """
    coeffs = np.zeros((2 * K + 1, 2 * M + 1, 2 * M + 1), dtype=np.complex128)
    for k, e1, e2 in modes:
        if k == 0:
            raise NonMeanZeroError(f"cosine mode {(k, e1, e2)} has k = 0")
        coeffs[K + k, M + e1, M + e2] += amplitude / 2.0
        coeffs[K - k, M - e1, M - e2] += amplitude / 2.0
    return SpatialSpectrum(K, M, coeffs)


# ---------------------------------------------------------------------------
# Convergence and Lipschitz studies
# ---------------------------------------------------------------------------


class ConvergenceReport(BaseModel):
    dts: List[float]
    errors: List[float]
    reduction_factors: List[float]
    flagged: bool = False


def time_step_convergence(
    u0: SpatialSpectrum, cfg: SolverConfig, dts: Sequence[float], reference: SolverConfig
) -> ConvergenceReport:
    """
    Errors at t_end against a reference run, one per step size.

    The reference may use larger bounds; its final state is truncated onto
    the bounds of cfg before comparison.
    """
    ref_data = embed_spatial(u0, reference.K, reference.M)
    ref = solve_cauchy(ref_data, reference.model_copy(update={"save_every": 10 ** 9})).states[-1]
    ref = embed_spatial(ref, cfg.K, cfg.M)
    errors = []
    for dt in dts:
        run = solve_cauchy(u0, cfg.model_copy(update={"dt": dt, "save_every": 10 ** 9}))
        errors.append((run.states[-1] - ref).norm())
        logger.info(f"dt={dt:.3e}: error {errors[-1]:.3e}")
    factors = [a / b if b > 0 else math.inf for a, b in zip(errors, errors[1:])]
    flagged = min(errors) < ROUNDOFF_ERROR
    if flagged:
        logger.warning(f"Convergence errors {errors} reach roundoff; reduction factors are not meaningful")
    return ConvergenceReport(dts=[float(d) for d in dts], errors=errors, reduction_factors=factors, flagged=flagged)


class LipschitzReport(BaseModel):
    initial_difference: float
    sup_difference: float
    ratio: Optional[float]
    flagged: bool


def _sobolev_weights(cfg: SolverConfig, s: float, eps: float) -> np.ndarray:
    k, e1, e2 = spatial_mesh(cfg.K, cfg.M)
    return _pack(k_weight(k, s, "homogeneous") * bracket(np.hypot(e1, e2)) ** eps, cfg.K)


def lipschitz_probe(
    u0: SpatialSpectrum, v0: SpatialSpectrum, cfg: SolverConfig, T: float, s: float = 0.0, eps: float = 0.0
) -> LipschitzReport:
    """
    sup_{t <= T} ||u(t) - v(t)||_{H^s H^eps} / ||u0 - v0||_{H^s H^eps}.

    Both runs advance in lockstep so only the current pair of states is held.
    Identical data is flagged with no ratio.
    """
    run = cfg.model_copy(update={"t_end": T})
    for data in (u0, v0):
        _check_data(data, run)
        _require_stable(data, run)
    w = _sobolev_weights(run, s, eps)
    initial = float(np.linalg.norm((w * _pack((u0 - v0).coeffs, cfg.K)).ravel()))
    if initial == 0:
        logger.warning("Lipschitz probe on identical data")
        return LipschitzReport(initial_difference=0.0, sup_difference=0.0, ratio=None, flagged=True)
    sup = 0.0
    for (_, _, u), (_, _, v) in zip(_march(u0, run), _march(v0, run)):
        sup = max(sup, float(np.linalg.norm((w * (u - v)).ravel())))
    return LipschitzReport(initial_difference=initial, sup_difference=sup, ratio=sup / initial, flagged=False)


# ---------------------------------------------------------------------------
# Duhamel-Picard iteration
# ---------------------------------------------------------------------------


class PicardReport(BaseModel):
    depth: int
    T: float
    differences_l2: List[float]
    differences_x: List[float]
    ratios_l2: List[float]
    ratios_x: List[float]
    stepper_difference: Optional[float] = None

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.ratios_l2, self.ratios_l2[1:]))

    @property
    def contracting(self) -> bool:
        return all(r < 1 for r in self.ratios_l2 + self.ratios_x)


@dataclass(eq=False)
class PicardResult:
    """Iterates u_1..u_depth at t = T plus the contraction report."""

    iterates: List[SpatialSpectrum]
    report: PicardReport


def windowed_xsb_norm(
    samples: np.ndarray, times: np.ndarray, T: float, K: int, M: int, params: NormParams, J: int = 16
) -> float:
    """
    X_{s,eps,b} norm of a solution piece known on [0, T], as a stand-in for the restriction norm.

    The samples (full spatial coefficient arrays, one per time) are multiplied
    by a bump supported on [0, T], interpolated linearly onto the 2J+1
    centred times of a window of length 2T and transformed in time.
    """
    grid = GridSpec(K=K, M=M, J=J, T_w=2.0 * T)
    n_t = 2 * J + 1
    t = centred_times(grid, n_t)
    inside = (t >= 0.0) & (t <= T)
    h = times[1] - times[0]
    position = np.clip(t / h, 0.0, len(times) - 1.0)
    left = np.minimum(np.floor(position).astype(int), len(times) - 2)
    frac = (position - left)[:, None, None, None]
    values = (1.0 - frac) * samples[left] + frac * samples[left + 1]
    window = np.where(inside, bump((2.0 * t - T) / T), 0.0)
    values = values * window[:, None, None, None]
    series = np.fft.fft(np.moveaxis(values, 0, -1), axis=-1) / n_t
    index = np.arange(-J, J + 1) % n_t
    return xsb_norm(SpaceTimeSpectrum(grid, series[..., index]), params)


def duhamel_picard(
    u0: SpatialSpectrum,
    cfg: SolverConfig,
    depth: int,
    T: float,
    norm: Optional[NormParams] = None,
    compare: bool = True,
) -> PicardResult:
    """
    Picard iterates of u = e^{it phi} u0 - 1/2 int_0^t e^{i(t-s) phi} d_x(u^2)(s) ds on [0, T].

    The iteration runs in the interaction picture w = e^{-it phi} u on the time
    grid of step cfg.dt, with the integral by cumulative trapezoid. u_0 = 0,
    so u_1 is the free evolution.

    Args:
        u0: Mean-zero data on the solver bounds
        cfg: Solver configuration (dt, dealiasing, dispersion)
        depth: Number of iterates, at least 1
        T: Final time
        norm: Exponents of the windowed X norm, default s = eps = 0, b = 0.55
        compare: Also run the time stepper to T and record the difference

    Returns:
        PicardResult: Iterates at t = T, differences and ratios in C^0 L^2 and windowed X

    Raises:
        PicardDivergenceError: If a ratio exceeds 10
    """
    if depth < 1:
        raise ValueError(f"depth must be at least 1, got {depth}")
    _check_data(u0, cfg)
    norm = norm or NormParams(b=0.55, disp=cfg.disp)
    n = max(1, int(round(T / cfg.dt)))
    times = np.linspace(0.0, T, n + 1)
    h = T / n
    ops = _Operators.build(cfg.model_copy(update={"nonlinear": True}))
    phase = np.exp(times[:, None, None, None] * ops.L[None])
    start = _pack(u0.coeffs, cfg.K)

    w_prev = np.zeros((n + 1,) + start.shape, dtype=np.complex128)
    w = np.broadcast_to(start, w_prev.shape).copy()
    iterates, differences_l2, differences_x = [], [], []
    ratios_l2, ratios_x = [], []

    def measure(delta_w: np.ndarray) -> Tuple[float, float]:
        delta_u = phase * delta_w
        c0 = float(np.sqrt(np.max(np.sum(np.abs(delta_u) ** 2, axis=(1, 2, 3)))))
        full = np.insert(delta_u, cfg.K, 0.0, axis=1)
        return c0, windowed_xsb_norm(full, times, T, cfg.K, cfg.M, norm)

    for level in range(1, depth + 1):
        if level > 1:
            integrand = np.stack([np.conj(phase[i]) * ops.nonlinear(phase[i] * w[i]) for i in range(n + 1)])
            increments = 0.5 * h * (integrand[1:] + integrand[:-1])
            w_next = np.empty_like(w)
            w_next[0] = start
            w_next[1:] = start + np.cumsum(increments, axis=0)
            w_prev, w = w, w_next
        iterates.append(u0.replace(_unpack(phase[-1] * w[-1], cfg.K)))
        c0, x = measure(w - w_prev)
        differences_l2.append(c0)
        differences_x.append(x)
        if level > 1:
            ratios_l2.append(c0 / differences_l2[-2] if differences_l2[-2] > 0 else 0.0)
            ratios_x.append(x / differences_x[-2] if differences_x[-2] > 0 else 0.0)
            logger.debug(f"Picard level {level}: ratio {ratios_l2[-1]:.3e} (C0L2), {ratios_x[-1]:.3e} (X)")
            if max(ratios_l2[-1], ratios_x[-1]) > PICARD_DIVERGENCE:
                report = PicardReport(
                    depth=level, T=T, differences_l2=differences_l2, differences_x=differences_x,
                    ratios_l2=ratios_l2, ratios_x=ratios_x,
                )
                raise PicardDivergenceError(report, f"Picard ratio {max(ratios_l2[-1], ratios_x[-1]):.3g} at level {level}")

    stepper_difference = None
    if compare:
        run = cfg.model_copy(update={"t_end": T, "save_every": 10 ** 9})
        final = None
        for _, _, u in _march(u0, run):
            final = u
        stepper_difference = float(np.linalg.norm((_unpack(final, cfg.K) - iterates[-1].coeffs).ravel()))
    report = PicardReport(
        depth=depth, T=T, differences_l2=differences_l2, differences_x=differences_x,
        ratios_l2=ratios_l2, ratios_x=ratios_x, stepper_difference=stepper_difference,
    )
    logger.info(f"Picard depth {depth} on [0, {T}]: ratios {[round(r, 4) for r in ratios_l2]}")
    return PicardResult(iterates=iterates, report=report)
