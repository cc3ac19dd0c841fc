"""Discrete moving planes: reflections, excess functionals and critical hyperplanes.

For a direction omega and level lambda the cap is Sigma = {x : <omega, x> > lambda}
and u_lambda(x) = u(x^lambda) with x^lambda = x + 2(lambda - <omega, x>) omega.
Reflected points that leave the mesh are extended by zero on the disk
(Dirichlet data) and by the decay profile |x|^(-a) on a box.

lambda*(omega) is the smallest scanned level from which the excess stays
below a threshold tau on every higher level; the approximate center takes
the midpoint of the two-sided values along +-e_k.
"""
import asyncio
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from lmfit import Minimizer, Parameters
from scipy.stats import norm as normal_distribution
from scipy.stats import qmc

from config import (
    ANGULAR_SAMPLES_2D,
    ANGULAR_SAMPLES_ND,
    BISECTION_TOL,
    BOX_GRADING,
    BOX_NODES,
    DISK_ANGULAR_NODES,
    DISK_RADIAL_NODES,
    LAB_SEED,
    R_BOX_FACTOR,
    SCAN_LEVELS,
    SWEEP_WORKERS,
    THRESHOLD_C3,
    THRESHOLD_LIP_FACTOR,
)
from services.bubbles import (
    TalentiBubble,
    deficit_whole_space,
    manufactured_coefficient,
    perturbed_bubble,
)
from services.domain import (
    BOX,
    POLAR,
    EmptyRegionError,
    InvalidInputError,
    LabError,
    Mesh,
    NumericalError,
    Region,
    ScalarField,
    box_mesh,
    disk_mesh,
    gradient,
    interpolate_many,
    oscillation,
)
from services.problem import Coefficient, Nonlinearity, ProblemSpec
from services.solver import solve_dirichlet_2d

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
ROTATION_ANGLES = (math.pi / 6, math.pi / 3, math.pi / 2, math.pi)
DEGENERATE_ALPHA = 1e-3
NormSpec = Union[str, float]


@dataclass(frozen=True)
class HalfSpaceSpec:
    """Sigma_{omega, lambda} = {x : <omega, x> > lambda}."""
    direction: Tuple[float, ...]
    level: float

    def __post_init__(self):
        omega = np.asarray(self.direction, dtype=float)
        if omega.ndim != 1 or omega.size == 0:
            raise InvalidInputError("half-space direction must be a non-empty vector")
        if abs(np.linalg.norm(omega) - 1.0) > UNIT_TOL:
            raise InvalidInputError(f"half-space direction must be a unit vector, |omega| = {np.linalg.norm(omega)}")
        object.__setattr__(self, "direction", tuple(float(c) for c in omega))

    @classmethod
    def along(cls, direction: Sequence[float], level: float) -> "HalfSpaceSpec":
        """Normalize ``direction`` first."""
        omega = np.asarray(direction, dtype=float)
        length = np.linalg.norm(omega)
        if length == 0:
            raise InvalidInputError("half-space direction cannot be zero")
        return cls(tuple(omega / length), float(level))

    @property
    def omega(self) -> np.ndarray:
        return np.asarray(self.direction)

    def cap_mask(self, points: np.ndarray) -> np.ndarray:
        return points @ self.omega > self.level


def reflect_point(x, h: HalfSpaceSpec) -> np.ndarray:
    """x + 2(lambda - <omega, x>) omega for one point or an (m, n) array."""
    x = np.asarray(x, dtype=float)
    shift = 2.0 * (h.level - x @ h.omega)
    return x + np.multiply.outer(shift, h.omega)


def _require_planar_mesh(mesh: Mesh) -> None:
    if mesh.kind not in (POLAR, BOX):
        raise InvalidInputError(f"moving planes need a {POLAR} or {BOX} mesh, got {mesh.kind}")


def extended_values(u: ScalarField, points: np.ndarray,
                    decay_exponent: Optional[float] = None) -> np.ndarray:
    """u at arbitrary points: zero outside the disk, decay-extended outside a box."""
    mesh = u.mesh
    _require_planar_mesh(mesh)
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        return np.zeros(0)
    values = interpolate_many(u, points, outside="nan")
    outside = np.isnan(values)
    if not outside.any():
        return values
    if mesh.kind == POLAR:
        values[outside] = 0.0
        return values
    lo = np.array([a[0] for a in mesh.axes])
    hi = np.array([a[-1] for a in mesh.axes])
    far = points[outside]
    clipped = np.clip(far, lo, hi)
    base = interpolate_many(u, clipped, outside="nan")
    if decay_exponent is not None:
        origin = mesh.origin()
        near_r = np.linalg.norm(clipped - origin, axis=1)
        far_r = np.linalg.norm(far - origin, axis=1)
        base = base * (1.0 + near_r ** decay_exponent) / (1.0 + far_r ** decay_exponent)
    values[outside] = base
    return values


def _norm_exponent(norm: NormSpec) -> float:
    if isinstance(norm, str):
        text = norm.strip().lower()
        if text in ("sup", "inf", "linf"):
            return math.inf
        if text.startswith("l"):
            text = text[1:]
        try:
            q = float(text)
        except ValueError as e:
            raise InvalidInputError(f"unknown norm {norm!r}; use 'sup' or 'L<q>'") from e
    else:
        q = float(norm)
    if not q > 0:
        raise InvalidInputError(f"norm exponent must be positive, got {q}")
    return q


@dataclass
class ReflectionPair:
    """u, u_lambda and the linearization data on a cap.

    g1 = kappa f(u), g2 = kappa_lambda f(u) and c = (f(u) - f(u_lambda)) / (u - u_lambda)
    are nodal arrays over the whole mesh, meaningful on ``cap``.
    """
    half_space: HalfSpaceSpec
    cap: Region
    boundary: Region
    u: ScalarField
    reflected: ScalarField
    g1: np.ndarray
    g2: np.ndarray
    c: np.ndarray
    lipschitz_f: float

    @property
    def c_sup(self) -> float:
        return float(np.max(np.abs(self.c[self.cap.mask]))) if self.cap.count else 0.0


def reflection_pair(u: ScalarField, h: HalfSpaceSpec, kappa: Coefficient, f: Nonlinearity,
                    p: float, decay_exponent: Optional[float] = None) -> ReflectionPair:
    mesh = u.mesh
    _require_planar_mesh(mesh)
    cap = Region(mesh, h.cap_mask(mesh.points))
    images = reflect_point(mesh.points, h)
    reflected = extended_values(u, images, decay_exponent)
    fu = f.evaluate(u.values, p)
    f_reflected = f.evaluate(reflected, p)
    kappa_here = kappa.evaluate(mesh.points, mesh.n)
    kappa_reflected = kappa.evaluate(images, mesh.n)

    gap = u.values - reflected
    step = 1e-7 * np.maximum(1.0, np.abs(u.values))
    slope = (f.evaluate(u.values + step, p) - fu) / step
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(np.abs(gap) > 1e-12, (fu - f_reflected) / gap, slope)

    upper = float(max(u.values.max(), reflected.max(), 0.0)) * 1.01 + 1e-12
    lip = f.lipschitz(upper, p)
    pair = ReflectionPair(h, cap, cap.boundary_nodes(), u, ScalarField(mesh, reflected),
                          kappa_here * fu, kappa_reflected * fu, c, lip)
    if pair.c_sup > lip * (1.0 + 1e-3) + 1e-9:
        raise NumericalError(f"difference quotient {pair.c_sup:.6g} exceeds Lip(f) = {lip:.6g}")
    return pair


@dataclass
class ExcessResult:
    value: float
    vacuous: bool
    nodes: int
    norm: float
    pair: Optional[ReflectionPair] = None


def excess_details(u: ScalarField, h: HalfSpaceSpec, norm: NormSpec = "sup",
                   region: Optional[Region] = None, decay_exponent: Optional[float] = None,
                   kappa: Optional[Coefficient] = None, f: Optional[Nonlinearity] = None,
                   p: Optional[float] = None) -> ExcessResult:
    """||(u - u_lambda)_+|| over Sigma ∩ region; pass kappa, f and p for the diagnostics."""
    mesh = u.mesh
    _require_planar_mesh(mesh)
    q = _norm_exponent(norm)
    mask = h.cap_mask(mesh.points)
    if region is not None:
        if region.mesh is not mesh:
            raise InvalidInputError("region and field live on different meshes")
        mask &= region.mask
    pair = None
    if kappa is not None and f is not None and p is not None:
        pair = reflection_pair(u, h, kappa, f, p, decay_exponent)
    if not mask.any():
        return ExcessResult(0.0, True, 0, q, pair)
    reflected = extended_values(u, reflect_point(mesh.points[mask], h), decay_exponent)
    positive = np.maximum(u.values[mask] - reflected, 0.0)
    if math.isinf(q):
        value = float(positive.max())
    else:
        value = float(np.dot(mesh.weights[mask], positive ** q) ** (1.0 / q))
    return ExcessResult(value, False, int(mask.sum()), q, pair)


def excess(u: ScalarField, h: HalfSpaceSpec, norm: NormSpec = "sup",
           region: Optional[Region] = None, decay_exponent: Optional[float] = None) -> float:
    return excess_details(u, h, norm, region, decay_exponent).value


def lipschitz(u: ScalarField) -> float:
    return float(gradient(u).magnitude().values.max())


def grid_spacing(mesh: Mesh) -> float:
    """Node spacing at the mesh center: largest over the axes of a box, the mesh size on the disk."""
    if mesh.kind == BOX:
        spacing = []
        for axis in mesh.axes:
            mid = len(axis) // 2
            spacing.append(max(axis[mid] - axis[mid - 1], axis[min(mid + 1, len(axis) - 1)] - axis[mid]))
        return float(max(spacing))
    return mesh.h


@dataclass
class Threshold:
    value: float
    deficit_part: float
    discretization_part: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def default_threshold(u: ScalarField, deficit: float = 0.0, c3: float = THRESHOLD_C3,
                      lip_factor: float = THRESHOLD_LIP_FACTOR) -> Threshold:
    """tau = max(C3 * def, 3 h Lip(u))."""
    deficit_part = c3 * max(deficit, 0.0)
    discretization_part = lip_factor * grid_spacing(u.mesh) * lipschitz(u)
    return Threshold(max(deficit_part, discretization_part), deficit_part, discretization_part)


@dataclass
class CriticalLambda:
    """``boundary`` is None for an interior value, else 'lower' or 'upper'."""
    direction: Tuple[float, ...]
    value: float
    threshold: float
    boundary: Optional[str]
    interval: Tuple[float, float]

    def to_dict(self) -> Dict[str, Any]:
        return {"direction": list(self.direction), "lambda_star": self.value,
                "threshold": self.threshold, "boundary": self.boundary,
                "interval": list(self.interval)}


def scan_interval(mesh: Mesh, omega: np.ndarray) -> Tuple[float, float]:
    if mesh.kind == POLAR:
        return -1.0, 1.0
    shift = float(mesh.origin() @ omega)
    reach = float(np.sum(np.abs(omega)) * mesh.extent)
    return shift - reach, shift + reach


def critical_lambda(u: ScalarField, omega: Sequence[float], threshold: Optional[float] = None,
                    norm: NormSpec = "sup", interval: Optional[Tuple[float, float]] = None,
                    levels: int = SCAN_LEVELS, tol: float = BISECTION_TOL,
                    decay_exponent: Optional[float] = None,
                    region: Optional[Region] = None) -> CriticalLambda:
    """Descending scan for the first failing level, then bisection against the last passing one."""
    mesh = u.mesh
    _require_planar_mesh(mesh)
    direction = tuple(float(c) for c in np.asarray(omega, dtype=float))
    if threshold is None:
        threshold = default_threshold(u).value
    if threshold < 0:
        raise InvalidInputError(f"threshold must be non-negative, got {threshold}")
    if levels < 2:
        raise InvalidInputError(f"need at least two scan levels, got {levels}")
    lo, hi = interval if interval is not None else scan_interval(mesh, np.asarray(direction))
    if not lo < hi:
        raise InvalidInputError(f"scan interval ({lo}, {hi}) is empty")

    def passes(level: float) -> bool:
        h = HalfSpaceSpec.along(direction, level)
        return excess(u, h, norm, region, decay_exponent) <= threshold

    if math.isinf(threshold):
        return CriticalLambda(direction, lo, threshold, None, (lo, hi))
    grid = np.linspace(hi, lo, levels)
    if not passes(grid[0]):
        logger.warning(f"excess exceeds tau at the top of the scan along {direction}")
        return CriticalLambda(direction, float(grid[0]), threshold, "upper", (lo, hi))
    passing = grid[0]
    for level in grid[1:]:
        if not passes(level):
            failing = level
            break
        passing = level
    else:
        return CriticalLambda(direction, float(lo), threshold, "lower", (lo, hi))

    top, bottom = float(passing), float(failing)
    while top - bottom > tol:
        middle = 0.5 * (top + bottom)
        if passes(middle):
            top = middle
        else:
            bottom = middle
    return CriticalLambda(direction, top, threshold, None, (lo, hi))


@dataclass
class CenterEstimate:
    center: np.ndarray
    degraded: bool
    lambdas: List[CriticalLambda] = field(default_factory=list)
    two_sided_gap: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"center": self.center.tolist(), "degraded": self.degraded,
                "lambdas": [lam.to_dict() for lam in self.lambdas],
                "two_sided_gap": self.two_sided_gap}


def approximate_center(u: ScalarField, thresholds: Union[None, float, Sequence[float]] = None,
                       norm: NormSpec = "sup", levels: int = SCAN_LEVELS, tol: float = BISECTION_TOL,
                       decay_exponent: Optional[float] = None) -> CenterEstimate:
    """O_k from lambda*(e_k) and lambda*(-e_k); the midpoint when both are interior.

    ``thresholds`` is one tau for every direction or a sequence of n values.
    """
    mesh = u.mesh
    _require_planar_mesh(mesh)
    n = mesh.dim
    if thresholds is None:
        taus = [default_threshold(u).value] * n
    elif np.isscalar(thresholds):
        taus = [float(thresholds)] * n
    else:
        taus = [float(t) for t in thresholds]
        if len(taus) != n:
            raise InvalidInputError(f"expected {n} thresholds, got {len(taus)}")

    center = np.zeros(n)
    degraded = False
    lambdas: List[CriticalLambda] = []
    gaps: List[float] = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        forward = critical_lambda(u, e, taus[k], norm, levels=levels, tol=tol,
                                  decay_exponent=decay_exponent)
        backward = critical_lambda(u, -e, taus[k], norm, levels=levels, tol=tol,
                                   decay_exponent=decay_exponent)
        lambdas.extend([forward, backward])
        if forward.boundary is None and backward.boundary is None:
            center[k] = 0.5 * (forward.value - backward.value)
        elif backward.boundary is None:
            center[k] = -backward.value
        else:
            center[k] = forward.value
        if forward.boundary is not None or backward.boundary is not None:
            degraded = True
        gaps.append(forward.value + backward.value)

    if mesh.kind == POLAR:
        radius = np.linalg.norm(center)
        if radius > 1.0:
            center = center / radius
    if degraded:
        logger.warning(f"approximate center {center.tolist()} rests on a boundary-of-scan lambda*")
    return CenterEstimate(center, degraded, lambdas, gaps)


def sphere_directions(n: int, seed: int = LAB_SEED) -> np.ndarray:
    """256 equispaced angles in 2-D; 1024 scrambled-Sobol Gaussian directions otherwise."""
    if n == 2:
        theta = 2.0 * np.pi * np.arange(ANGULAR_SAMPLES_2D) / ANGULAR_SAMPLES_2D
        return np.column_stack((np.cos(theta), np.sin(theta)))
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    uniform = sampler.random_base2(int(math.log2(ANGULAR_SAMPLES_ND)))
    gaussian = normal_distribution.ppf(np.clip(uniform, 1e-12, 1.0 - 1e-12))
    return gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)


def default_shell_radii(mesh: Mesh, center: Sequence[float], count: int = 8) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    if mesh.kind == POLAR:
        reach = 1.0 - float(np.linalg.norm(center))
    else:
        reach = mesh.extent - float(np.max(np.abs(center - mesh.origin())))
    if reach <= 0:
        raise EmptyRegionError(f"center {center.tolist()} leaves no room for shells")
    return reach * np.linspace(0.1, 0.9, count)


def shell_oscillations(u: ScalarField, center: Sequence[float],
                       radii: Optional[Sequence[float]] = None,
                       seed: int = LAB_SEED) -> Dict[float, float]:
    """max - min of u on each shell |x - O| = r that fits inside the region."""
    mesh = u.mesh
    _require_planar_mesh(mesh)
    center = np.asarray(center, dtype=float)
    if radii is None:
        radii = default_shell_radii(mesh, center)
    directions = sphere_directions(mesh.dim, seed)
    result: Dict[float, float] = {}
    for r in radii:
        points = center + float(r) * directions
        if float(r) <= 0 or not mesh.contains(points).all():
            logger.warning(f"shell of radius {float(r):.4g} about {center.tolist()} leaves the region; skipped")
            continue
        values = interpolate_many(u, points)
        result[float(r)] = float(np.ptp(values))
    if not result:
        raise EmptyRegionError("no shell fits inside the region")
    return result


def angular_oscillation(u: ScalarField, center: Sequence[float],
                        radii: Optional[Sequence[float]] = None, seed: int = LAB_SEED) -> float:
    return max(shell_oscillations(u, center, radii, seed).values())


def plane_rotation(n: int, i: int, j: int, angle: float) -> np.ndarray:
    if not (0 <= i < n and 0 <= j < n and i != j):
        raise InvalidInputError(f"invalid rotation plane ({i}, {j}) in dimension {n}")
    theta = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    theta[i, i] = theta[j, j] = c
    theta[i, j], theta[j, i] = -s, s
    return theta


def rotation_family(n: int) -> List[Tuple[str, np.ndarray]]:
    family = []
    for i in range(n):
        for j in range(i + 1, n):
            for angle in ROTATION_ANGLES:
                family.append((f"x{i + 1}x{j + 1}:{angle:.4f}", plane_rotation(n, i, j, angle)))
    return family


def rotation_deficit(u: ScalarField, center: Sequence[float], theta: np.ndarray, p: float,
                     decay_exponent: Optional[float] = None) -> Tuple[float, float]:
    """(||u - u_Theta||_inf, ||grad(u - u_Theta)||_p) with u_Theta(x) = u(O + Theta(x - O))."""
    mesh = u.mesh
    _require_planar_mesh(mesh)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mesh.dim, mesh.dim) or not np.allclose(theta.T @ theta, np.eye(mesh.dim), atol=1e-10):
        raise InvalidInputError("rotation must be an orthogonal n x n matrix")
    center = np.asarray(center, dtype=float)
    rotated = extended_values(u, center + (mesh.points - center) @ theta.T, decay_exponent)
    difference = ScalarField(mesh, u.values - rotated)
    sup_part = float(np.max(np.abs(difference.values)))
    grad = gradient(difference).magnitude().values
    grad_part = float(np.dot(mesh.weights, grad ** p) ** (1.0 / p))
    return sup_part, grad_part


@dataclass
class RotationSummary:
    sup: float
    gradient: float
    worst: str

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def max_rotation_deficit(u: ScalarField, center: Sequence[float], p: float,
                         decay_exponent: Optional[float] = None) -> RotationSummary:
    best = RotationSummary(0.0, 0.0, "identity")
    for label, theta in rotation_family(u.mesh.dim):
        sup_part, grad_part = rotation_deficit(u, center, theta, p, decay_exponent)
        best.sup = max(best.sup, sup_part)
        if grad_part > best.gradient:
            best.gradient, best.worst = grad_part, label
    return best


def log_law(d, c: float, alpha: float):
    """s = C |log(C d)|^(-alpha)."""
    d = np.asarray(d, dtype=float)
    return c * np.abs(np.log(c * d)) ** (-alpha)


@dataclass
class LogLawFit:
    c: float
    alpha: float
    residual: float
    degenerate: bool
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {"C": self.c, "alpha": self.alpha, "residual": self.residual,
                "degenerate": self.degenerate, "samples": self.samples}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LogLawFit":
        return cls(float(data["C"]), float(data["alpha"]), float(data["residual"]),
                   bool(data["degenerate"]), int(data["samples"]))


def _log_law_residual(params, log_d, log_s):
    c = params["C"].value
    alpha = params["alpha"].value
    return log_s - (math.log(c) - alpha * np.log(np.abs(math.log(c) + log_d)))


def _profile_alpha(c: float, log_d: np.ndarray, log_s: np.ndarray) -> Tuple[float, float]:
    x = np.log(np.abs(math.log(c) + log_d))
    y = log_s - math.log(c)
    denominator = float(np.dot(x, x))
    alpha = -float(np.dot(x, y)) / denominator if denominator > 0 else 0.0
    return alpha, float(np.sum((y + alpha * x) ** 2))


def fit_log_law(samples: Sequence[Tuple[float, float]]) -> LogLawFit:
    """Fit log s = log C - alpha log|log(C d)| by Nelder-Mead with C >= 1.

    The simplex starts from the best point of a grid over C with alpha
    profiled out, and is restarted once from its own optimum.
    """
    if len(samples) < 3:
        raise InvalidInputError(f"the log-law fit needs at least 3 samples, got {len(samples)}")
    d = np.array([s[0] for s in samples], dtype=float)
    s = np.array([s[1] for s in samples], dtype=float)
    if np.any(~np.isfinite(d)) or np.any((d <= 0) | (d >= 1)):
        raise InvalidInputError("deficits must lie in (0, 1)")
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise InvalidInputError("deviations must be positive")
    log_d, log_s = np.log(d), np.log(s)

    c_max = (1.0 - 1e-3) / float(d.max())
    if c_max <= 1.0:
        grid = np.array([1.0])
    else:
        grid = np.unique(np.concatenate(([1.0], np.geomspace(1.0, c_max, 400)[1:-1],
                                         np.arange(2.0, min(math.floor(c_max), 1000) + 1.0))))
        grid = grid[grid < c_max]
    scores = [(_profile_alpha(c, log_d, log_s)[1], c) for c in grid]
    _, c0 = min(scores)
    alpha0, _ = _profile_alpha(c0, log_d, log_s)

    params = Parameters()
    if c_max <= 1.0:
        params.add("C", value=1.0, vary=False)
    else:
        params.add("C", value=c0, min=1.0, max=c_max)
    params.add("alpha", value=alpha0)
    options = {"xatol": 1e-12, "fatol": 1e-18, "maxiter": 20000, "maxfev": 40000}
    for _ in range(2):
        minimizer = Minimizer(_log_law_residual, params, fcn_args=(log_d, log_s))
        result = minimizer.minimize(method="nelder", options=options)
        params = result.params

    c = float(params["C"].value)
    alpha = float(params["alpha"].value)
    residual = float(np.sqrt(np.mean(_log_law_residual(params, log_d, log_s) ** 2)))
    degenerate = abs(alpha) < DEGENERATE_ALPHA or float(np.ptp(log_s)) < 1e-12
    if degenerate:
        logger.warning(f"log-law fit is degenerate (alpha={alpha:.3g})")
    return LogLawFit(c, alpha, residual, bool(degenerate), len(samples))


@dataclass
class MovingPlanesReport:
    """Result of the full pipeline on one field."""
    n: int
    mesh_kind: str
    lambdas: List[CriticalLambda]
    threshold: Threshold
    center: np.ndarray
    degraded: bool
    angular_oscillation: float
    rotation: RotationSummary
    deficit: float
    deficit_kind: str
    hyperplane_distances: List[float]

    def lambda_star(self, k: int) -> float:
        """lambda* along +e_k (0-based)."""
        return self.lambdas[2 * k].value

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "mesh_kind": self.mesh_kind,
            "lambdas": [lam.to_dict() for lam in self.lambdas],
            "threshold": self.threshold.to_dict(),
            "center": self.center.tolist(),
            "degraded": self.degraded,
            "angular_oscillation": self.angular_oscillation,
            "rotation": self.rotation.to_dict(),
            "deficit": self.deficit,
            "deficit_kind": self.deficit_kind,
            "hyperplane_distances": self.hyperplane_distances,
        }


def analyze(u: ScalarField, p: float, deficit: float = 0.0, deficit_kind: str = "osc",
            c3: float = THRESHOLD_C3, threshold: Optional[float] = None,
            decay_exponent: Optional[float] = None, radii: Optional[Sequence[float]] = None,
            levels: int = SCAN_LEVELS, seed: int = LAB_SEED) -> MovingPlanesReport:
    """Run lambda* along +-e_k, the center, the shell oscillation and the rotation sweep."""
    tau = default_threshold(u, deficit, c3)
    if threshold is not None:
        tau = Threshold(float(threshold), tau.deficit_part, tau.discretization_part)
    estimate = approximate_center(u, tau.value, levels=levels, decay_exponent=decay_exponent)
    distances = [abs(float(np.dot(lam.direction, estimate.center)) - lam.value)
                 for lam in estimate.lambdas]
    osc = angular_oscillation(u, estimate.center, radii, seed)
    rotation = max_rotation_deficit(u, estimate.center, p, decay_exponent)
    logger.info(f"moving planes: center {np.round(estimate.center, 6).tolist()}, "
                f"oscillation {osc:.4e}, rotation {rotation.gradient:.4e}")
    return MovingPlanesReport(u.mesh.n, u.mesh.kind, estimate.lambdas, tau, estimate.center,
                              estimate.degraded, osc, rotation, float(deficit), deficit_kind,
                              distances)


@dataclass
class SweepSample:
    epsilon: float
    deficit: float
    report: MovingPlanesReport

    @property
    def deviation(self) -> float:
        return self.report.angular_oscillation


@dataclass
class SweepResult:
    family: str
    samples: List[SweepSample]
    dropped: List[Tuple[float, str]]
    fit: Optional[LogLawFit] = None
    fit_error: Optional[str] = None

    def fit_samples(self) -> List[Tuple[float, float]]:
        return [(s.deficit, s.deviation) for s in self.samples
                if 0 < s.deficit < 1 and s.deviation > 0]


SWEEP_FAMILIES = ("ball", "space")


def _ball_point(base: ProblemSpec, mesh: Mesh, epsilon: float, c3: float, levels: int,
                seed: int) -> SweepSample:
    kappa = Coefficient("affine", base.kappa.base, epsilon, base.kappa.direction)
    report = solve_dirichlet_2d(base.with_kappa(kappa), mesh)
    if not report.converged:
        raise NumericalError(f"solver stopped at residual {report.residual:.3e}")
    deficit = oscillation(kappa.field(mesh))
    analysis = analyze(report.solution, base.p, deficit, "osc", c3, levels=levels, seed=seed)
    return SweepSample(epsilon, deficit, analysis)


def _space_point(base: ProblemSpec, mesh: Mesh, epsilon: float, c3: float, levels: int,
                 seed: int) -> SweepSample:
    bubble = TalentiBubble(tuple(mesh.center), 1.0, base.n, base.p)
    u = perturbed_bubble(bubble, mesh, epsilon)
    if np.any(u.values <= 0):
        raise NumericalError("perturbed bubble is not positive")
    kappa = manufactured_coefficient(u, base.p)
    if not np.all(np.isfinite(kappa.values)):
        raise NumericalError("manufactured coefficient is not finite")
    deficit = deficit_whole_space(u, kappa, base.p)
    analysis = analyze(u, base.p, deficit, "whole-space", c3,
                       decay_exponent=bubble.decay_exponent, levels=levels, seed=seed)
    return SweepSample(epsilon, deficit, analysis)


async def sweep_experiment(base: ProblemSpec, family: str, epsilons: Sequence[float],
                           mesh: Optional[Mesh] = None, c3: float = THRESHOLD_C3,
                           levels: int = SCAN_LEVELS, seed: int = LAB_SEED,
                           workers: int = SWEEP_WORKERS) -> SweepResult:
    """Solve, measure and analyze each epsilon concurrently; fit the log law at the end.

    ``ball`` perturbs kappa = base + eps x_n on the disk; ``space`` perturbs a
    bubble by eps <e_1, x> exp(-|x|^2) on a box and manufactures kappa.
    """
    if family not in SWEEP_FAMILIES:
        raise InvalidInputError(f"unknown sweep family {family!r}; expected one of {SWEEP_FAMILIES}")
    if not epsilons:
        raise InvalidInputError("a sweep needs at least one epsilon")
    if family == "ball":
        mesh = mesh or disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
        point = _ball_point
    else:
        mesh = mesh or box_mesh(base.n, R_BOX_FACTOR, BOX_NODES, grading=BOX_GRADING)
        point = _space_point
    gate = asyncio.Semaphore(max(1, workers))

    async def run_one(epsilon: float):
        async with gate:
            try:
                return await asyncio.to_thread(point, base, mesh, float(epsilon), c3, levels, seed)
            except LabError as e:
                logger.error(f"sweep sample eps={epsilon} dropped: {e}", exc_info=e)
                return f"{type(e).__name__}: {e}"

    outcomes = await asyncio.gather(*(run_one(eps) for eps in epsilons))
    samples: List[SweepSample] = []
    dropped: List[Tuple[float, str]] = []
    for eps, outcome in zip(epsilons, outcomes):
        if isinstance(outcome, SweepSample):
            samples.append(outcome)
        else:
            dropped.append((float(eps), outcome))

    result = SweepResult(family, samples, dropped)
    usable = result.fit_samples()
    if len(usable) >= 3:
        result.fit = fit_log_law(usable)
    else:
        result.fit_error = f"{len(usable)} usable samples, the fit needs 3"
        logger.warning(f"log-law fit skipped: {result.fit_error}")
    return result


def run_sweep(base: ProblemSpec, family: str, epsilons: Sequence[float], **kwargs) -> SweepResult:
    return asyncio.run(sweep_experiment(base, family, epsilons, **kwargs))
