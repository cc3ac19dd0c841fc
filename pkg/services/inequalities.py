"""Measured versions of the comparison machinery used by the moving-planes argument.

Every check works on discrete fields and reports what it measured next to
the bound it compares against; constants that are not explicit (Harnack,
local boundedness, small-domain comparison) are returned as measured ratios.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from config import (
    EXCLUDED_MEASURE_LIMIT,
    GRADIENT_FLOOR,
    HARNACK_C_FLAT,
    HARNACK_C_NATURAL,
    LAB_SEED,
)
from services.domain import (
    POLAR,
    InvalidInputError,
    PreconditionError,
    Region,
    ScalarField,
    ball_region,
    ball_volume,
    gradient,
    lq_norm,
)
from services.moving_planes import HalfSpaceSpec, reflection_pair
from services.problem import Coefficient, Nonlinearity

logger = logging.getLogger(__name__)

FieldLike = Union[ScalarField, np.ndarray]
FUNDAMENTAL_DIMENSION = 3
FUNDAMENTAL_CHUNK = 100_000
BOUNDARY_TOL = 1e-10


def _values(field_like: FieldLike, size: int) -> np.ndarray:
    values = field_like.values if isinstance(field_like, ScalarField) else np.asarray(field_like, dtype=float)
    if values.shape != (size,):
        raise InvalidInputError(f"expected {size} nodal values, got shape {values.shape}")
    return values


def _mask(u: ScalarField, region: Optional[Region]) -> np.ndarray:
    if region is None:
        return np.ones(u.mesh.size, dtype=bool)
    if region.mesh is not u.mesh:
        raise InvalidInputError("region and field live on different meshes")
    return region.mask


# Fundamental vector inequalities

def reference_constants(p: float) -> Dict[str, float]:
    """Classical constants: lower c, upper C and the companion (c_hat for p >= 2, C_hat below)."""
    if p <= 1:
        raise InvalidInputError(f"p must exceed 1, got {p}")
    if p >= 2:
        return {"c": 0.5 * min(1.0, 2.0 ** (3.0 - p)), "C": p - 1.0, "c_hat": 2.0 ** (2.0 - p)}
    return {"c": p - 1.0, "C": 2.0 ** (2.0 - p) / (p - 1.0), "C_hat": 2.0 ** (2.0 - p)}


@dataclass
class FundamentalCheck:
    p: float
    samples: int
    empirical: Dict[str, float]
    reference: Dict[str, float]
    adopted: Dict[str, float]
    violations: Dict[str, int]

    @property
    def holds(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "samples": self.samples, "empirical": self.empirical,
                "reference": self.reference, "adopted": self.adopted,
                "violations": self.violations, "holds": self.holds}


def _vector_pairs(rng: np.random.Generator, count: int, dim: int):
    eta = rng.standard_normal((count, dim))
    other = rng.standard_normal((count, dim)) * np.exp(rng.normal(0.0, 2.0, (count, 1)))
    # Anchor pairs where the inequalities are sharp or degenerate.
    anchors = min(count // 10, 1000)
    if anchors:
        other[:anchors] = -eta[:anchors]
        other[anchors:2 * anchors] = 0.0
        other[2 * anchors:3 * anchors] = eta[2 * anchors:3 * anchors] * rng.uniform(0.0, 1.0, (anchors, 1))
    return eta, other


def fundamental_ineq_check(p: float, samples: int = 1_000_000, seed: int = LAB_SEED,
                           dim: int = FUNDAMENTAL_DIMENSION) -> FundamentalCheck:
    """Sample vector pairs and extremize the ratios behind the three inequalities.

    Pairs with eta = eta' make both sides vanish and are counted as tight.
    A sampled violation of a reference constant fails the check and the
    adopted constant drops to the observed one.
    """
    reference = reference_constants(p)
    rng = np.random.default_rng(seed)
    lower, upper = math.inf, 0.0
    companion = math.inf if p >= 2 else 0.0
    done = 0
    while done < samples:
        count = min(FUNDAMENTAL_CHUNK, samples - done)
        eta, other = _vector_pairs(rng, count, dim)
        done += count
        norm_a = np.linalg.norm(eta, axis=1)
        norm_b = np.linalg.norm(other, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            flux_a = np.where(norm_a[:, None] > 0, norm_a[:, None] ** (p - 2.0) * eta, 0.0)
            flux_b = np.where(norm_b[:, None] > 0, norm_b[:, None] ** (p - 2.0) * other, 0.0)
        diff = eta - other
        gap = np.linalg.norm(diff, axis=1)
        keep = (gap > 1e-12 * np.maximum(norm_a, norm_b)) & (norm_a + norm_b > 0)
        if not keep.any():
            continue
        gap, total = gap[keep], (norm_a + norm_b)[keep]
        monotone = np.einsum("ij,ij->i", (flux_a - flux_b)[keep], diff[keep])
        spread = np.linalg.norm((flux_a - flux_b)[keep], axis=1)
        scale = total ** (p - 2.0)
        lower = min(lower, float(np.min(monotone / (scale * gap ** 2))))
        upper = max(upper, float(np.max(spread / (scale * gap))))
        if p >= 2:
            companion = min(companion, float(np.min(monotone / gap ** p)))
        else:
            companion = max(companion, float(np.max(spread / gap ** (p - 1.0))))

    key = "c_hat" if p >= 2 else "C_hat"
    empirical = {"c": lower, "C": upper, key: companion}
    adopted = dict(reference)
    violations = {"c": 0, "C": 0, key: 0}
    rtol = 1e-10
    if lower < reference["c"] * (1.0 - rtol):
        violations["c"] = 1
        adopted["c"] = lower
    if upper > reference["C"] * (1.0 + rtol):
        violations["C"] = 1
        adopted["C"] = upper
    if (p >= 2 and companion < reference[key] * (1.0 - rtol)) or (p < 2 and companion > reference[key] * (1.0 + rtol)):
        violations[key] = 1
        adopted[key] = companion
    for name, count in violations.items():
        if count:
            logger.warning(f"sampled violation of {name}(p={p}); constant lowered to {adopted[name]:.6g}")
    return FundamentalCheck(p, samples, empirical, reference, adopted, violations)


# Weighted Sobolev machinery

def exponent_2M(n: int, p: float) -> float:
    """1/2_M = 1/2 - 1/n + (p-2)/((p-1) n)."""
    if n < 2 or p <= 2:
        raise InvalidInputError(f"2_M needs n >= 2 and p > 2, got n={n}, p={p}")
    return 1.0 / (0.5 - 1.0 / n + (p - 2.0) / ((p - 1.0) * n))


def admissible_t_range(p: float) -> tuple:
    """Open interval of t = ((p-1)/(p-2)) r with r in ((p-2)/(p-1), 1)."""
    if p <= 2:
        raise InvalidInputError(f"the weight condition is stated for p > 2, got {p}")
    return 1.0, (p - 1.0) / (p - 2.0)


def t_from_r(p: float, r: float) -> float:
    lo = (p - 2.0) / (p - 1.0)
    if not lo < r < 1.0:
        raise InvalidInputError(f"r must lie in ({lo:.6g}, 1), got {r}")
    return (p - 1.0) / (p - 2.0) * r


def sobolev_exponent_t(n: int, t: float, gamma: float = 0.0) -> float:
    """2*(t) with 1/2*(t) = 1/2 - 1/n + (1/t)(1/2 - gamma/(2n)); inf when the right side is <= 0."""
    inverse = 0.5 - 1.0 / n + (0.5 - gamma / (2.0 * n)) / t
    return math.inf if inverse <= 0 else 1.0 / inverse


def _check_gamma(n: int, gamma: float) -> None:
    if n == 2 and gamma != 0:
        raise InvalidInputError("in dimension 2 the weight condition needs gamma = 0")
    if n > 2 and not gamma < n - 2:
        raise InvalidInputError(f"gamma must be < n - 2 = {n - 2}, got {gamma}")


@dataclass
class WeightCondition:
    value: float
    excluded_measure: float
    excluded_fraction: float
    degraded: bool


def weight_condition_constant(rho: ScalarField, t: float, gamma: float = 0.0,
                              region: Optional[Region] = None,
                              max_anchors: int = 256) -> WeightCondition:
    """C* = max_x of the quadrature of rho^(-t) |x - y|^(-gamma) over the region.

    Nodes with rho <= GRADIENT_FLOOR are dropped and their measure reported.
    For gamma > 0 the anchors x are an evenly strided subset of the region
    nodes and the self term y = x is skipped.
    """
    mesh = rho.mesh
    _check_gamma(mesh.n, gamma)
    if t <= 0:
        raise InvalidInputError(f"t must be positive, got {t}")
    mask = _mask(rho, region)
    if not mask.any():
        raise InvalidInputError("weight condition over an empty region")
    weights = mesh.weights[mask]
    values = rho.values[mask]
    floored = values <= GRADIENT_FLOOR
    measure = float(weights.sum())
    excluded = float(weights[floored].sum())
    fraction = excluded / measure if measure > 0 else 0.0
    degraded = fraction > EXCLUDED_MEASURE_LIMIT
    if degraded:
        logger.warning(f"weight vanishes on {fraction:.2%} of the region; C* is degraded")

    kept = ~floored
    density = np.zeros_like(values)
    density[kept] = weights[kept] * values[kept] ** (-t)
    if gamma == 0:
        return WeightCondition(float(density.sum()), excluded, fraction, degraded)

    points = mesh.points[mask]
    stride = max(1, len(points) // max_anchors)
    best = 0.0
    for anchor in points[::stride]:
        dist = np.linalg.norm(points - anchor, axis=1)
        with np.errstate(divide="ignore"):
            kernel = np.where(dist > 0, dist ** (-gamma), 0.0)
        best = max(best, float(np.dot(density, kernel)))
    return WeightCondition(best, excluded, fraction, degraded)


@dataclass
class WeightReport:
    """C_S = C_hat (C*)^(1/(2t)) (C_M)^(1/(2t)')."""
    c_star: float
    t: float
    gamma: float
    q: float
    measure: float
    mu: float
    delta: float
    c_m: float
    c_hat: float
    c_s: float
    zero_mean_variant: bool
    degraded: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def weight_report(rho: ScalarField, t: float, q: float, gamma: float = 0.0,
                  region: Optional[Region] = None, zero_mean_set: Optional[Region] = None,
                  diameter: Optional[float] = None) -> WeightReport:
    """Assemble C*, C_M and C_hat into C_S for exponents 1 <= q < 2*(t).

    With ``zero_mean_set`` S the convex variant C_hat = diam^n / (n |S|) is
    used; ``diameter`` defaults to the largest node distance in the region.
    """
    mesh = rho.mesh
    n = mesh.n
    critical = sobolev_exponent_t(n, t, gamma)
    if not 1 <= q < critical:
        raise InvalidInputError(f"q must lie in [1, 2*(t)) = [1, {critical:.6g}), got {q}")
    condition = weight_condition_constant(rho, t, gamma, region)
    mask = _mask(rho, region)
    measure = float(mesh.weights[mask].sum())

    mu = 1.0 / n
    s0 = 2.0 * t / (t + 1.0)
    delta = max(0.0, 1.0 / s0 - 1.0 / q)
    if not delta < mu:
        raise InvalidInputError(f"delta = {delta:.6g} must be below mu = {mu:.6g}")
    unit = ball_volume(n)
    c_m = ((1.0 - delta) / (mu - delta)) ** (1.0 - delta) * unit ** (mu - delta) * measure ** (mu - delta)

    if zero_mean_set is None:
        c_hat = 1.0 / (n * unit)
    else:
        if zero_mean_set.mesh is not mesh:
            raise InvalidInputError("zero-mean set and weight live on different meshes")
        s_measure = zero_mean_set.measure
        if s_measure <= 0:
            raise InvalidInputError("the zero-mean set must have positive measure")
        if diameter is None:
            points = mesh.points[mask]
            lo, hi = points.min(axis=0), points.max(axis=0)
            diameter = float(np.linalg.norm(hi - lo))
        c_hat = diameter ** n / (n * s_measure)

    two_t = 2.0 * t
    c_s = c_hat * condition.value ** (1.0 / two_t) * c_m ** ((two_t - 1.0) / two_t)
    return WeightReport(condition.value, t, gamma, q, measure, mu, delta, c_m, c_hat, c_s,
                        zero_mean_set is not None, condition.degraded)


def _weighted_dirichlet(rho: ScalarField, v: ScalarField, mask: np.ndarray) -> float:
    grad = gradient(v).magnitude().values
    return float(np.dot(v.mesh.weights[mask], rho.values[mask] * grad[mask] ** 2))


def _check_vanishing(v: ScalarField, mask: np.ndarray, region: Optional[Region]) -> None:
    """v must be zero on the mesh boundary and at every node outside the region."""
    outside = ~mask | v.mesh.boundary_mask()
    scale = max(float(np.max(np.abs(v.values))), 1.0)
    bad = outside & (np.abs(v.values) > BOUNDARY_TOL * scale)
    if bad.any():
        node = int(np.argmax(bad))
        raise PreconditionError(f"test field does not vanish on the boundary (v = {v.values[node]:.3e})", node)


@dataclass
class SobolevCheck:
    ratio: float
    bound: float
    passed: bool
    contradiction: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def check_weighted_sobolev(rho: ScalarField, v: ScalarField, q: float, report: WeightReport,
                           region: Optional[Region] = None,
                           zero_mean_set: Optional[Region] = None) -> SobolevCheck:
    """||v||_q / ||grad v||_{2, rho} against C_S."""
    mask = _mask(v, region)
    if zero_mean_set is None:
        _check_vanishing(v, mask, region)
    else:
        mean = float(np.dot(v.mesh.weights[zero_mean_set.mask], v.values[zero_mean_set.mask]))
        if abs(mean) > 1e-8 * max(zero_mean_set.measure, 1.0) * max(float(np.max(np.abs(v.values))), 1.0):
            raise PreconditionError(f"test field has mean {mean:.3e} on the zero-mean set")
    numerator = lq_norm(v, q, region)
    denominator = math.sqrt(_weighted_dirichlet(rho, v, mask))
    if numerator == 0:
        return SobolevCheck(0.0, report.c_s, True, False)
    if denominator == 0:
        logger.warning("test field has zero weighted gradient but is not zero")
        return SobolevCheck(math.inf, report.c_s, False, True)
    ratio = numerator / denominator
    return SobolevCheck(ratio, report.c_s, ratio <= report.c_s, False)


@dataclass
class PoincareCheck:
    lhs: float
    rhs: float
    c_p: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def poincare_constant(measure: float, theta: float, p: float, n: int) -> float:
    """|Omega|^(2 theta / ((p-1) n))."""
    if not 0 < theta < 1:
        raise InvalidInputError(f"theta must lie in (0, 1), got {theta}")
    return measure ** (2.0 * theta / ((p - 1.0) * n))


def check_weighted_poincare(rho: ScalarField, v: ScalarField, report: WeightReport, theta: float,
                            p: float, region: Optional[Region] = None,
                            vanish_on: Optional[Region] = None) -> PoincareCheck:
    """int v^2 <= C_P C_S^2 int rho |grad v|^2 on the region (minus ``vanish_on``)."""
    mask = _mask(v, region)
    measure = float(v.mesh.weights[mask].sum())
    if vanish_on is None:
        _check_vanishing(v, mask, region)
    else:
        inside = vanish_on.mask & mask
        if np.any(np.abs(v.values[inside]) > BOUNDARY_TOL * max(float(np.max(np.abs(v.values))), 1.0)):
            raise PreconditionError("test field does not vanish on the declared set")
        measure -= float(v.mesh.weights[inside].sum())
    c_p = poincare_constant(measure, theta, p, v.mesh.n)
    lhs = float(np.dot(v.mesh.weights[mask], v.values[mask] ** 2))
    rhs = c_p * report.c_s ** 2 * _weighted_dirichlet(rho, v, mask)
    return PoincareCheck(lhs, rhs, c_p, lhs <= rhs)


# Comparison checks

@dataclass
class ComparisonCheck:
    k_hat: float
    numerator: float
    denominator: float
    c_sup: float
    passed: bool
    measure: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def small_domain_comparison(u1: ScalarField, u2: ScalarField, region: Region, g1: FieldLike,
                            g2: FieldLike, c: Optional[FieldLike] = None) -> ComparisonCheck:
    """K_hat = ||(u1 - u2)_+||_inf / ||g1 - g2||_inf on the region.

    u1 <= u2 is required on the nodal boundary of the region.
    """
    mesh = u1.mesh
    if u2.mesh is not mesh or region.mesh is not mesh:
        raise InvalidInputError("comparison fields live on different meshes")
    if region.is_empty:
        raise InvalidInputError("comparison over an empty region")
    diff = u1.values - u2.values
    scale = max(float(np.max(np.abs(u1.values))), float(np.max(np.abs(u2.values))), 1.0)
    edge = region.boundary_nodes().mask
    bad = edge & (diff > BOUNDARY_TOL * scale)
    if bad.any():
        node = int(np.argmax(bad))
        raise PreconditionError(f"u1 > u2 on the boundary by {diff[node]:.3e}", node)
    mask = region.mask
    numerator = float(np.max(np.maximum(diff[mask], 0.0)))
    source_gap = _values(g1, mesh.size) - _values(g2, mesh.size)
    denominator = float(np.max(np.abs(source_gap[mask])))
    c_sup = float(np.max(np.abs(_values(c, mesh.size)[mask]))) if c is not None else 0.0
    if numerator == 0:
        k_hat = 0.0
    elif denominator == 0:
        k_hat = math.inf
    else:
        k_hat = numerator / denominator
    return ComparisonCheck(k_hat, numerator, denominator, c_sup, math.isfinite(k_hat),
                           region.measure)


@dataclass
class ComparisonFamily:
    levels: List[float]
    checks: List[ComparisonCheck]

    @property
    def bounded(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def spread(self) -> float:
        """max K_hat / min K_hat over the positive values (1 when fewer than two)."""
        positive = [c.k_hat for c in self.checks if c.k_hat > 0 and math.isfinite(c.k_hat)]
        return max(positive) / min(positive) if len(positive) > 1 else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {"levels": self.levels, "checks": [c.to_dict() for c in self.checks],
                "bounded": self.bounded, "spread": self.spread}


def kappa_hat_stability(u: ScalarField, direction: Sequence[float], levels: Sequence[float],
                        kappa: Coefficient, f: Nonlinearity, p: float, decay_exponent: Optional[float] = None) -> ComparisonFamily:
    """Small-domain comparison of u against u_lambda on a family of caps."""
    checks = []
    for level in levels:
        pair = reflection_pair(u, HalfSpaceSpec.along(direction, level), kappa, f, p, decay_exponent)
        checks.append(small_domain_comparison(u, pair.reflected, pair.cap, pair.g1, pair.g2, pair.c))
        logger.debug(f"cap at lambda={level}: K_hat={checks[-1].k_hat:.4g}")
    return ComparisonFamily([float(level) for level in levels], checks)


@dataclass
class HarnackConfig:
    """Exponents and constants of the weak Harnack comparison.

    ``frak_q`` must satisfy 2q/(q-2) < frak_q < 2_M and ``s`` lies in (0, frak_q/2).
    """
    n: int
    p: float
    s: float
    q: float
    frak_q: float
    c_flat: float = HARNACK_C_FLAT
    c_natural: float = HARNACK_C_NATURAL
    c_bound: float = 0.0
    frak_c: float = 1.0
    constant: float = 1.0

    def __post_init__(self):
        two_m = exponent_2M(self.n, self.p)
        if not self.q > 2:
            raise InvalidInputError(f"q must exceed 2, got {self.q}")
        if not 2.0 * self.q / (self.q - 2.0) < self.frak_q < two_m:
            raise InvalidInputError(
                f"need 2q/(q-2) = {2.0 * self.q / (self.q - 2.0):.6g} < frak_q = {self.frak_q:.6g} < 2_M = {two_m:.6g}"
            )
        if self.n == 3 and not (self.q > 4 and self.frak_q < 4):
            raise InvalidInputError("in dimension 3 the Harnack exponents need q > 4 and frak_q < 4")
        if not 0 < self.s < self.chi:
            raise InvalidInputError(f"s must lie in (0, {self.chi:.6g}), got {self.s}")
        if not 0 < self.c_flat < 1:
            raise InvalidInputError(f"c_flat must lie in (0, 1), got {self.c_flat}")
        if self.c_natural < 1 or self.frak_c < 1 or self.constant < 1:
            raise InvalidInputError("c_natural, frak_c and the Harnack constant must be >= 1")

    @property
    def chi(self) -> float:
        return self.frak_q / 2.0

    @classmethod
    def default_for(cls, n: int, p: float, **overrides) -> "HarnackConfig":
        """q = 4n (raised when 2_M forces it), frak_q mid-interval, s = min(1, chi)/2."""
        two_m = exponent_2M(n, p)
        q_floor = 2.0 * two_m / (two_m - 2.0)
        q = max(4.0 * n, 2.0 * q_floor)
        upper = min(two_m, 4.0) if n == 3 else two_m
        frak_q = 0.5 * (2.0 * q / (q - 2.0) + upper)
        s = min(1.0, frak_q / 2.0) / 2.0
        values = {"n": n, "p": p, "s": s, "q": q, "frak_q": frak_q}
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def harnack_radius_factor(config: HarnackConfig, radius: float, c_s: Optional[float] = None) -> float:
    """M(R); the C_S-explicit form when ``c_s`` is given."""
    if radius <= 0:
        raise InvalidInputError(f"radius must be positive, got {radius}")
    power = 2.0 / (config.frak_q - 2.0)
    prefactor = radius ** (-config.n / config.s)
    if c_s is None:
        return prefactor * (config.c_flat * radius) ** (config.c_natural / radius ** power)
    if c_s < 1:
        raise InvalidInputError(f"the explicit form assumes C_S >= 1, got {c_s}")
    exponent = config.c_natural * c_s * (c_s ** 2 / radius) ** power
    return prefactor * (config.c_flat * radius / c_s) ** exponent


def _require_ball_inside(u: ScalarField, center: np.ndarray, radius: float) -> None:
    mesh = u.mesh
    if mesh.kind == POLAR:
        inside = float(np.linalg.norm(center)) + radius <= 1.0 + 1e-12
    else:
        lo = np.array([a[0] for a in mesh.axes])
        hi = np.array([a[-1] for a in mesh.axes])
        inside = bool(np.all(center - radius >= lo - 1e-12) and np.all(center + radius <= hi + 1e-12))
    if not inside:
        raise InvalidInputError(f"B_{radius:.4g}({center.tolist()}) is not inside the region")


@dataclass
class HarnackResult:
    lhs: float
    rhs: float
    ratio: float
    m_r: float
    k: float
    infimum: float
    measured_constant: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def harnack_check(u1: ScalarField, u2: ScalarField, x0: Sequence[float], radius: float,
                  config: HarnackConfig, g1: FieldLike, g2: FieldLike,
                  c_s: Optional[float] = None) -> HarnackResult:
    """M(R) ||u2 - u1||_{L^s(B_2R)} against C (inf_{B_R}(u2 - u1) + 2 frak_c k)."""
    if radius > 1:
        raise InvalidInputError(f"the weak Harnack comparison needs R <= 1, got {radius}")
    mesh = u1.mesh
    center = np.asarray(x0, dtype=float)
    _require_ball_inside(u1, center, 5.0 * radius)
    ball5 = ball_region(mesh, center, 5.0 * radius)
    source_gap = _values(g1, mesh.size) - _values(g2, mesh.size)
    k = lq_norm(ScalarField(mesh, source_gap), config.q, ball5)
    diff = u1.values - u2.values
    bad = ball5.mask & (diff > config.frak_c * k + BOUNDARY_TOL)
    if bad.any():
        node = int(np.argmax(bad))
        raise PreconditionError(f"u1 - u2 = {diff[node]:.3e} exceeds frak_c k = {config.frak_c * k:.3e}", node)

    gap = ScalarField(mesh, u2.values - u1.values)
    m_r = harnack_radius_factor(config, radius, c_s)
    lhs = m_r * lq_norm(gap, config.s, ball_region(mesh, center, 2.0 * radius))
    infimum = float(np.min(gap.values[ball_region(mesh, center, radius).mask]))
    base = infimum + 2.0 * config.frak_c * k
    rhs = config.constant * base
    if lhs == 0:
        ratio, measured = 0.0, 0.0
    elif base <= 0:
        ratio, measured = math.inf, math.inf
    else:
        ratio, measured = lhs / rhs, lhs / base
    return HarnackResult(lhs, rhs, ratio, m_r, k, infimum, measured, ratio <= 1.0)


def local_bound_factor(config: HarnackConfig, radius: float, c_s: float, p_sharp: float) -> float:
    """(C_S^2 / R)^((2/p_sharp) frak_q / (frak_q - 2))."""
    if p_sharp <= 1:
        raise InvalidInputError(f"p_sharp must exceed 1, got {p_sharp}")
    exponent = (2.0 / p_sharp) * config.frak_q / (config.frak_q - 2.0)
    return (c_s ** 2 / radius) ** exponent


@dataclass
class LocalBoundResult:
    sup: float
    norm: float
    k: float
    factor: float
    boundary_level: float
    measured_constant: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def local_bound_check(u1: ScalarField, u2: ScalarField, x0: Sequence[float], radius: float,
                      p_sharp: float, config: HarnackConfig, c_s: float, g1: FieldLike,
                      g2: FieldLike, region: Optional[Region] = None,
                      boundary: bool = False) -> LocalBoundResult:
    """Measured C_sharp = sup_{B_R} / ((C_S^2/R)^e (||(u1-u2)_+||_{p_sharp, B_2R} + k)).

    The boundary form replaces (u1 - u2)_+ by max(u1 - u2, M) inside ``region``
    and M outside, with M the largest (u1 - u2)_+ on the region's boundary
    nodes in B_2R.
    """
    mesh = u1.mesh
    center = np.asarray(x0, dtype=float)
    domain = region.mask if region is not None else np.ones(mesh.size, dtype=bool)
    if not boundary:
        _require_ball_inside(u1, center, 5.0 * radius)
    ball1 = ball_region(mesh, center, radius).mask
    ball2 = ball_region(mesh, center, 2.0 * radius).mask
    ball5 = ball_region(mesh, center, 5.0 * radius).mask
    diff = u1.values - u2.values
    source_gap = _values(g1, mesh.size) - _values(g2, mesh.size)

    if boundary:
        if region is None:
            raise InvalidInputError("the boundary form needs the region whose boundary carries M")
        edge = region.boundary_nodes().mask & ball2
        level = float(np.max(np.maximum(diff[edge], 0.0))) if edge.any() else 0.0
        shifted = np.where(domain, np.maximum(diff, level), level)
        support = ball5 & domain & (diff > level)
        target = shifted
    else:
        level = 0.0
        target = np.maximum(diff, 0.0)
        support = ball5 & (diff > 0)

    if support.any():
        k = lq_norm(ScalarField(mesh, source_gap), config.q, Region(mesh, support))
    else:
        k = 0.0
    if not ball1.any() or not ball2.any():
        raise InvalidInputError(f"B_{radius:.4g} contains no mesh nodes")
    sup = float(np.max(target[ball1] if boundary else diff[ball1]))
    norm = lq_norm(ScalarField(mesh, target), p_sharp, Region(mesh, ball2))
    factor = local_bound_factor(config, radius, c_s, p_sharp)
    denominator = factor * (norm + k)
    if sup <= 0:
        measured = 0.0
    elif denominator == 0:
        measured = math.inf
    else:
        measured = sup / denominator
    return LocalBoundResult(sup, norm, k, factor, level, measured)


# Gradient summability

@dataclass
class GradIntegrability:
    value: float
    floored_fraction: float
    degraded: bool
    divergent: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def grad_integrability(u: ScalarField, r: float, p: float,
                       region: Optional[Region] = None) -> GradIntegrability:
    """Quadrature of |grad u|^(-(p-1) r); nodes below GRADIENT_FLOOR are left out.

    More than EXCLUDED_MEASURE_LIMIT of the nodes at the floor flags the
    result as degraded; the same fraction of the region's measure makes it
    divergent (a plateau).
    """
    if not 0 < r < 1:
        raise InvalidInputError(f"r must lie in (0, 1), got {r}")
    mask = _mask(u, region)
    if not mask.any():
        raise InvalidInputError("integrability over an empty region")
    grad = gradient(u).magnitude().values[mask]
    weights = u.mesh.weights[mask]
    floored = grad <= GRADIENT_FLOOR
    node_fraction = float(floored.mean())
    measure_fraction = float(weights[floored].sum() / weights.sum())
    degraded = node_fraction > EXCLUDED_MEASURE_LIMIT
    divergent = measure_fraction > EXCLUDED_MEASURE_LIMIT
    if divergent:
        logger.warning(f"|grad u| vanishes on {measure_fraction:.2%} of the region; integral diverges")
        return GradIntegrability(math.inf, node_fraction, degraded, True)
    kept = ~floored
    value = float(np.dot(weights[kept], grad[kept] ** (-(p - 1.0) * r)))
    return GradIntegrability(value, node_fraction, degraded, False)
