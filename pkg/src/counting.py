"""
Lattice point counting for shifted annuli in Z^2.

Counts #{eta in Z^2 : r <= |eta - delta|^2 < r + 1}, their restriction to
discs and squares, representations as sums of two squares, the residue
classes behind the half-integer shift argument, and empirical growth fits.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

logger = logging.getLogger(__name__)

# Largest power-of-two denominator tried when looking for an exact scaling of delta
MAX_DYADIC_EXPONENT = 20


class Annulus(BaseModel):
    """The lattice annulus r <= |eta - delta|^2 < r + 1."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(ge=0)
    delta: Tuple[float, float] = (0.0, 0.0)


class Region(BaseModel):
    """A closed disc |eta - c| <= R or square max_i |eta_i - c_i| <= R."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["disc", "square"] = "disc"
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = Field(gt=0.0)

    @field_validator("radius")
    @classmethod
    def _bounded(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("region must be bounded (finite radius)")
        return value

    def contains(self, eta1: np.ndarray, eta2: np.ndarray) -> np.ndarray:
        """Vectorised membership test for integer coordinates."""
        d1 = np.asarray(eta1, dtype=float) - self.center[0]
        d2 = np.asarray(eta2, dtype=float) - self.center[1]
        if self.kind == "disc":
            return d1 * d1 + d2 * d2 <= self.radius * self.radius
        return np.maximum(np.abs(d1), np.abs(d2)) <= self.radius

    def lattice_points(self) -> Tuple[np.ndarray, np.ndarray]:
        """All integer points of the region as two coordinate arrays."""
        lo1 = math.ceil(self.center[0] - self.radius)
        hi1 = math.floor(self.center[0] + self.radius)
        lo2 = math.ceil(self.center[1] - self.radius)
        hi2 = math.floor(self.center[1] + self.radius)
        e1, e2 = np.meshgrid(
            np.arange(lo1, hi1 + 1), np.arange(lo2, hi2 + 1), indexing="ij"
        )
        e1, e2 = e1.ravel(), e2.ravel()
        mask = self.contains(e1, e2)
        return e1[mask], e2[mask]


def _dyadic_scale(delta: Tuple[float, float]) -> Optional[int]:
    """Smallest q = 2^m with q * delta integral, or None if delta is not dyadic."""
    fractions = [Fraction(d) for d in delta]
    for m in range(MAX_DYADIC_EXPONENT + 1):
        q = 1 << m
        if all((f * q).denominator == 1 for f in fractions):
            return q
    return None


def reduce_delta(delta: Tuple[float, float]) -> Tuple[Tuple[float, float], Tuple[int, int]]:
    """
    Split delta into its fractional part in [0,1)^2 and an integer shift.

    Args:
        delta: The real shift

    Returns:
        Tuple: (reduced delta, integer part)
    """
    m = (math.floor(delta[0]), math.floor(delta[1]))
    return (delta[0] - m[0], delta[1] - m[1]), m


def _box(delta: Tuple[float, float], r_max: int) -> Tuple[np.ndarray, np.ndarray]:
    radius = math.isqrt(r_max + 1) + 2
    e1, e2 = np.meshgrid(
        np.arange(math.floor(delta[0]) - radius, math.ceil(delta[0]) + radius + 1),
        np.arange(math.floor(delta[1]) - radius, math.ceil(delta[1]) + radius + 1),
        indexing="ij",
    )
    return e1.ravel().astype(np.int64), e2.ravel().astype(np.int64)


def _shell_index(e1: np.ndarray, e2: np.ndarray, delta: Tuple[float, float]) -> np.ndarray:
    """floor(|eta - delta|^2) per point; exact when delta is dyadic."""
    q = _dyadic_scale(delta)
    if q is not None:
        d1 = int(Fraction(delta[0]) * q)
        d2 = int(Fraction(delta[1]) * q)
        scaled = (q * e1 - d1) ** 2 + (q * e2 - d2) ** 2
        return scaled // (q * q)
    logger.debug(f"Non-dyadic shift {delta}, using floating point membership")
    return np.floor((e1 - delta[0]) ** 2 + (e2 - delta[1]) ** 2).astype(np.int64)


def count_annulus(a: Annulus) -> int:
    """
    Count lattice points with r <= |eta - delta|^2 < r + 1 by enumeration.

    Args:
        a: The annulus

    Returns:
        int: Exact count
    """
    delta, _ = reduce_delta(a.delta)
    e1, e2 = _box(delta, a.r)
    return int(np.count_nonzero(_shell_index(e1, e2, delta) == a.r))


def annulus_counts(r_max: int, delta: Tuple[float, float]) -> np.ndarray:
    """
    Counts for every r in [0, r_max] from a single enumeration.

    Args:
        r_max: Largest annulus index
        delta: The shift

    Returns:
        np.ndarray: counts[r] for r = 0..r_max
    """
    delta, _ = reduce_delta(delta)
    e1, e2 = _box(delta, r_max)
    shells = _shell_index(e1, e2, delta)
    shells = shells[shells <= r_max]
    return np.bincount(shells, minlength=r_max + 1)


def count_annulus_in_region(a: Annulus, region: Region) -> int:
    """
    Count annulus points lying in a disc or square.

    Args:
        a: The annulus
        region: The bounded region B

    Returns:
        int: Exact count, never larger than count_annulus(a)
    """
    e1, e2 = region.lattice_points()
    if e1.size == 0:
        return 0
    delta, shift = reduce_delta(a.delta)
    in_shell = _shell_index(e1 - shift[0], e2 - shift[1], delta) == a.r
    return int(np.count_nonzero(in_shell))


def _chi4(d: int) -> int:
    if d % 2 == 0:
        return 0
    return 1 if d % 4 == 1 else -1


def sum_two_squares(n: int) -> int:
    """
    Number of eta in Z^2 with |eta|^2 = n via r_2(n) = 4 (d_1(n) - d_3(n)).

    Args:
        n: Non-negative integer

    Returns:
        int: Representation count
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n == 0:
        return 1
    total = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            total += _chi4(d)
            if d * d != n:
                total += _chi4(n // d)
    return 4 * total


def sum_two_squares_table(n_max: int) -> np.ndarray:
    """r_2(n) for n <= n_max by direct enumeration of a^2 + b^2."""
    root = math.isqrt(n_max)
    a = np.arange(-root, root + 1, dtype=np.int64)
    squares = (a[:, None] ** 2 + a[None, :] ** 2).ravel()
    return np.bincount(squares[squares <= n_max], minlength=n_max + 1)


def divisor_sum_table(n_max: int) -> np.ndarray:
    """r_2(n) for n <= n_max by sieving the character sum over divisors."""
    table = np.zeros(n_max + 1, dtype=np.int64)
    for d in range(1, n_max + 1, 2):
        table[d::d] += _chi4(d)
    table *= 4
    table[0] = 1
    return table


def parity_class_counts(a: Annulus) -> Dict[int, int]:
    """
    Group annulus points by |2 eta - 2 delta|^2 mod 4 for half-integer delta.

    Args:
        a: Annulus whose shift satisfies 2 delta in Z^2

    Returns:
        Dict[int, int]: residue -> count, residues 0..3 always present

    Raises:
        ValueError: If delta is not a half-integer pair
    """
    twice = [Fraction(d) * 2 for d in a.delta]
    if any(t.denominator != 1 for t in twice):
        raise ValueError(f"delta {a.delta} is not a half-integer pair")
    d1, d2 = int(twice[0]), int(twice[1])
    e1, e2 = _box(a.delta, a.r)
    values = (2 * e1 - d1) ** 2 + (2 * e2 - d2) ** 2
    inside = (values >= 4 * a.r) & (values < 4 * a.r + 4)
    residues = values[inside] % 4
    counts = np.bincount(residues, minlength=4)
    return {residue: int(counts[residue]) for residue in range(4)}


def parity_class_table(r_max: int, delta: Tuple[float, float]) -> np.ndarray:
    """
    parity_class_counts for every r <= r_max from one enumeration.

    Returns:
        np.ndarray: table[r, residue], shape (r_max + 1, 4)
    """
    twice = [Fraction(d) * 2 for d in delta]
    if any(t.denominator != 1 for t in twice):
        raise ValueError(f"delta {delta} is not a half-integer pair")
    d1, d2 = int(twice[0]), int(twice[1])
    e1, e2 = _box(delta, r_max)
    values = (2 * e1 - d1) ** 2 + (2 * e2 - d2) ** 2
    shells = values // 4
    keep = shells <= r_max
    flat = np.bincount(4 * shells[keep] + values[keep] % 4, minlength=4 * (r_max + 1))
    return flat.reshape(r_max + 1, 4)


class DyadicClassReport(BaseModel):
    """Annulus points for delta = (m1, m2) / 2^m grouped by l = |2^m eta - 2^m delta|^2."""

    exponent: int
    modulus: int
    residue: int
    admissible: List[int]
    counts: Dict[int, int]
    off_class: int
    total: int
    bound: int


def dyadic_class_counts(a: Annulus) -> DyadicClassReport:
    """
    The mod-4 argument iterated to dyadic shifts.

    With q = 2^m and q delta integral, the annulus r <= |eta - delta|^2 < r + 1
    becomes q^2 r <= l < q^2 (r + 1) for l = |q eta - q delta|^2. For m >= 1,
    l = q^2 |eta|^2 - 2q <eta, q delta> + |q delta|^2 is fixed mod 2q, so only
    q / 2 of the q^2 candidate values of l carry points. The count is then at
    most the sum of r_2(l) over those admissible l.

    Args:
        a: Annulus with a dyadic shift

    Returns:
        DyadicClassReport: Counts by l; off_class is zero whenever the congruence holds

    Raises:
        ValueError: If delta is not dyadic
    """
    q = _dyadic_scale(a.delta)
    if q is None:
        raise ValueError(f"delta {a.delta} is not dyadic")
    m = q.bit_length() - 1
    d1 = int(Fraction(a.delta[0]) * q)
    d2 = int(Fraction(a.delta[1]) * q)
    modulus = 2 * q if q > 1 else 1
    residue = (d1 * d1 + d2 * d2) % modulus
    e1, e2 = _box(a.delta, a.r)
    values = (q * e1 - d1) ** 2 + (q * e2 - d2) ** 2
    values = values[(values >= q * q * a.r) & (values < q * q * (a.r + 1))]
    admissible = [l for l in range(q * q * a.r, q * q * (a.r + 1)) if l % modulus == residue]
    ls, counts = np.unique(values, return_counts=True)
    off_class = int(np.count_nonzero(values % modulus != residue))
    return DyadicClassReport(
        exponent=m,
        modulus=modulus,
        residue=residue,
        admissible=admissible,
        counts={int(l): int(c) for l, c in zip(ls, counts)},
        off_class=off_class,
        total=int(values.size),
        bound=sum(sum_two_squares(l) for l in admissible),
    )


def delta_grid(step_denominator: int) -> List[Tuple[float, float]]:
    """Shifts (i/n, j/n) for 0 <= i, j <= n."""
    n = step_denominator
    return [(i / n, j / n) for i in range(n + 1) for j in range(n + 1)]


def dyadic_radii(r_max: int) -> List[int]:
    """Powers of two 1, 2, 4, ... not exceeding r_max."""
    radii = []
    r = 1
    while r <= r_max:
        radii.append(r)
        r *= 2
    return radii


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Least squares slope of log y against log x.

    Non-positive y values are dropped with a warning.

    Args:
        x: Positive abscissae
        y: Values

    Returns:
        float: Fitted exponent

    Raises:
        ValueError: If fewer than two usable points remain
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if np.count_nonzero(keep) < len(y):
        logger.warning(f"Dropping {len(y) - np.count_nonzero(keep)} non-positive points from fit")
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two positive points to fit an exponent")
    slope, _ = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope)


def max_counts_over_deltas(
    r_values: Sequence[int], delta_samples: Sequence[Tuple[float, float]]
) -> np.ndarray:
    """Maximum annulus count over the shifts for each r."""
    r_values = np.asarray(r_values, dtype=np.int64)
    r_max = int(r_values.max())
    best = np.zeros(len(r_values), dtype=np.int64)
    for delta in delta_samples:
        counts = annulus_counts(r_max, delta)
        best = np.maximum(best, counts[r_values])
    return best


def fit_growth_exponent(r_max: int, delta_samples: Sequence[Tuple[float, float]]) -> float:
    """
    Fit the growth exponent of the worst-case annulus count.

    Args:
        r_max: Largest annulus index (at least 100)
        delta_samples: Shifts to maximise over

    Returns:
        float: Slope of log max_delta count against log r over dyadic r

    Raises:
        ValueError: On r_max < 100 or an empty shift sample
    """
    if r_max < 100:
        raise ValueError(f"r_max must be at least 100, got {r_max}")
    if not delta_samples:
        raise ValueError("delta_samples must not be empty")
    radii = dyadic_radii(r_max)
    best = max_counts_over_deltas(radii, delta_samples)
    slope = loglog_slope(radii, best)
    logger.info(f"Growth exponent over {len(delta_samples)} shifts, r <= {r_max}: {slope:.4f}")
    return slope


def small_region_max_count(
    r_values: Sequence[int],
    centers_per_r: int = 8,
    kind: Literal["disc", "square"] = "disc",
    shrink: float = 8.0,
    seed: int = 0,
) -> int:
    """
    Largest count of annulus points (delta = 0) inside a region of size r^(1/6)/shrink.

    Region centres are placed on the circle of radius sqrt(r) so that the
    intersection is non-trivial.

    Args:
        r_values: Annulus indices to sample
        centers_per_r: Number of centres per r
        kind: Region shape
        shrink: Divisor applied to r^(1/6)
        seed: Seed for the centre angles

    Returns:
        int: The observed maximum
    """
    rng = np.random.default_rng(seed)
    best = 0
    for r in r_values:
        size = max(r, 1) ** (1.0 / 6.0) / shrink
        for angle in rng.uniform(0.0, 2.0 * math.pi, size=centers_per_r):
            center = (math.sqrt(r) * math.cos(angle), math.sqrt(r) * math.sin(angle))
            region = Region(kind=kind, center=center, radius=size)
            best = max(best, count_annulus_in_region(Annulus(r=r), region))
    return best
