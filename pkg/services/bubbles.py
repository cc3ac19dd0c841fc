"""Talenti bubbles and the critical problem -Delta_p u = kappa u^(p*-1) in R^n.

Whole-space integrals are taken on a box mesh and, where the field decays
like |x|^(-(n-p)/(p-1)), completed by the exact integral of that decay law
outside the box. Tails are reported next to the box integrals so
the truncation error stays visible.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gamma

from config import BOX_GRADING, BOX_NODES, R_BOX_FACTOR
from services.domain import (
    BOX,
    InvalidInputError,
    Mesh,
    ScalarField,
    axis_weights,
    box_mesh,
    gradient,
)
from services.problem import conjugate, critical_exponent

logger = logging.getLogger(__name__)

# Bump scales of the residual test bank, as fractions of the box half-width.
BANK_SCALES = (0.15, 0.3, 0.6)
MASS_FLOOR_RTOL = 0.05

KappaLike = Union[ScalarField, float]


@dataclass(frozen=True)
class TalentiBubble:
    """U[z, lambda](x) = (K / (lambda^(p/(p-1)) + |x - z|^(p/(p-1))))^((n-p)/p)."""
    center: Tuple[float, ...]
    scale: float
    n: int
    p: float

    def __post_init__(self):
        if not 2 < self.p < self.n:
            raise InvalidInputError(f"bubbles need 2 < p < n, got p={self.p}, n={self.n}")
        if self.scale <= 0:
            raise InvalidInputError(f"bubble scale must be positive, got {self.scale}")
        if len(self.center) != self.n:
            raise InvalidInputError(f"bubble center has {len(self.center)} coordinates, expected {self.n}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def standard(cls, n: int, p: float) -> "TalentiBubble":
        return cls((0.0,) * n, 1.0, n, p)

    @property
    def decay_exponent(self) -> float:
        return (self.n - self.p) / (self.p - 1.0)

    @property
    def constant(self) -> float:
        n, p = self.n, self.p
        return self.scale ** (1.0 / (p - 1.0)) * n ** (1.0 / p) * ((n - p) / (p - 1.0)) ** ((p - 1.0) / p)

    @property
    def amplitude(self) -> float:
        """Limit of U(x) |x|^((n-p)/(p-1)) as |x| grows."""
        return self.constant ** ((self.n - self.p) / self.p)

    def _offsets(self, x) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise InvalidInputError(f"points have {x.shape[-1]} coordinates, expected {self.n}")
        offset = x - np.asarray(self.center)
        return offset, np.linalg.norm(offset, axis=-1)

    def evaluate(self, x) -> np.ndarray:
        _, rho = self._offsets(x)
        power = self.p / (self.p - 1.0)
        return (self.constant / (self.scale ** power + rho ** power)) ** ((self.n - self.p) / self.p)

    def gradient(self, x) -> np.ndarray:
        offset, rho = self._offsets(x)
        power = self.p / (self.p - 1.0)
        denominator = self.scale ** power + rho ** power
        with np.errstate(divide="ignore", invalid="ignore"):
            radial = np.where(rho > 0, rho ** ((2.0 - self.p) / (self.p - 1.0)), 0.0)
        factor = -self.decay_exponent * self.evaluate(x) / denominator * radial
        return factor[..., None] * offset

    def field(self, mesh: Mesh) -> ScalarField:
        return ScalarField(mesh, self.evaluate(mesh.points))

    def mesh(self, nodes: int = BOX_NODES, grading: float = BOX_GRADING,
             factor: float = R_BOX_FACTOR) -> Mesh:
        """Box of half-width ``factor * lambda`` centered on the bubble."""
        return box_mesh(self.n, factor * self.scale, nodes, grading=grading, center=self.center)


def bubble_eval(b: TalentiBubble, x) -> Union[float, np.ndarray]:
    value = b.evaluate(x)
    return float(value) if np.ndim(value) == 0 else value


def bubble_grad(b: TalentiBubble, x) -> np.ndarray:
    return b.gradient(x)


def talenti_constant(n: int, p: float) -> float:
    """Sharp constant S = inf ||grad u||_p / ||u||_{p*} in R^n, 1 < p < n."""
    if not 1 < p < n:
        raise InvalidInputError(f"the Sobolev constant needs 1 < p < n, got p={p}, n={n}")
    ratio = (gamma(n / p) * gamma(1.0 + n - n / p)
             / (gamma(1.0 + n / 2.0) * gamma(n)))
    return (math.sqrt(math.pi) * n ** (1.0 / p) * ((n - p) / (p - 1.0)) ** ((p - 1.0) / p)
            * ratio ** (1.0 / n))


def _require_box(u: ScalarField) -> Mesh:
    if u.mesh.kind != BOX:
        raise InvalidInputError(f"whole-space quantities need a {BOX} mesh, got {u.mesh.kind}")
    return u.mesh


def _kappa_values(kappa: KappaLike, mesh: Mesh) -> np.ndarray:
    if isinstance(kappa, ScalarField):
        if kappa.mesh is not mesh:
            raise InvalidInputError("kappa and u live on different meshes")
        return kappa.values
    return np.full(mesh.size, float(kappa))


@dataclass
class SobolevParts:
    value: float
    gradient_integral: float
    mass_integral: float
    gradient_tail: float
    mass_tail: float
    amplitude: float
    tail_radius: float

    @property
    def gradient_total(self) -> float:
        return self.gradient_integral + self.gradient_tail

    @property
    def mass_total(self) -> float:
        return self.mass_integral + self.mass_tail

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@lru_cache(maxsize=None)
def cube_exterior_factor(n: int, k: float) -> float:
    """int of |x|^(-k) over |x|_inf > 1 in R^n, k > n.

    The cone over each of the 2n faces gives 1/(k - n) times the face
    integral of (1 + |w|^2)^(-k/2) over [-1, 1]^(n-1) (Gauss-Legendre).
    """
    if k <= n:
        raise InvalidInputError(f"the exterior integral of |x|^-{k} diverges in dimension {n}")
    nodes, weights = np.polynomial.legendre.leggauss(24 if n <= 4 else 10)
    grids = np.meshgrid(*[nodes] * (n - 1), indexing="ij")
    squared = sum(g ** 2 for g in grids)
    w = np.ones_like(squared)
    for axis in range(n - 1):
        shape = [1] * (n - 1)
        shape[axis] = len(weights)
        w = w * weights.reshape(shape)
    face = float(np.sum(w * (1.0 + squared) ** (-k / 2.0)))
    return 2.0 * n * face / (k - n)


def sobolev_parts(u: ScalarField, p: float, tail: bool = True) -> SobolevParts:
    """Box integrals of |grad u|^p and |u|^p* plus their decay tails."""
    mesh = _require_box(u)
    n = mesh.n
    p_star = critical_exponent(n, p)
    grad = gradient(u).magnitude().values
    gradient_integral = float(np.dot(mesh.weights, grad ** p))
    mass_integral = float(np.dot(mesh.weights, np.abs(u.values) ** p_star))
    if mass_integral <= 0:
        raise InvalidInputError("the Sobolev quotient of the zero field is undefined")

    a = (n - p) / (p - 1.0)
    tail_radius = mesh.extent
    amplitude = gradient_tail = mass_tail = 0.0
    if tail:
        boundary = mesh.boundary_mask()
        dist = np.linalg.norm(mesh.points[boundary] - mesh.origin(), axis=1)
        amplitude = float(np.median(np.abs(u.values[boundary]) * dist ** a))
        # |grad u| ~ a A |x|^-(a+1) and u ~ A |x|^-a outside the box
        k_gradient, k_mass = (a + 1.0) * p, a * p_star
        gradient_tail = ((a * amplitude) ** p * cube_exterior_factor(n, k_gradient)
                         * tail_radius ** (n - k_gradient))
        mass_tail = amplitude ** p_star * cube_exterior_factor(n, k_mass) * tail_radius ** (n - k_mass)
    value = (gradient_integral + gradient_tail) ** (1.0 / p) / (mass_integral + mass_tail) ** (1.0 / p_star)
    return SobolevParts(value, gradient_integral, mass_integral, gradient_tail, mass_tail,
                        amplitude, tail_radius)


def sobolev_quotient(u: ScalarField, p: float, tail: bool = True) -> float:
    return sobolev_parts(u, p, tail).value


def _bump(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """exp(1 - 1/(1 - t^2)) on (-1, 1) and its derivative."""
    inside = np.abs(t) < 1.0
    safe = np.where(inside, t, 0.0)
    gap = 1.0 - safe ** 2
    value = np.where(inside, np.exp(1.0 - 1.0 / gap), 0.0)
    slope = np.where(inside, value * (-2.0 * safe / gap ** 2), 0.0)
    return value, slope


@lru_cache(maxsize=None)
def _unit_bump_gradient_norm(n: int, p: float) -> float:
    """||grad Phi||_p of the unit tensor bump on [-1, 1]^n."""
    nodes = 41 if n <= 3 else 21
    t = np.linspace(-1.0, 1.0, nodes)
    value, slope = _bump(t)
    w = np.full(nodes, t[1] - t[0])
    w[[0, -1]] *= 0.5
    squared = np.zeros((nodes,) * n)
    weights = np.ones((nodes,) * n)
    for k in range(n):
        shape = [1] * n
        shape[k] = nodes
        term = np.ones((nodes,) * n)
        for j in range(n):
            shape_j = [1] * n
            shape_j[j] = nodes
            term = term * (slope if j == k else value).reshape(shape_j)
        squared = squared + term ** 2
        weights = weights * w.reshape(shape)
    return float(np.sum(weights * squared ** (p / 2.0)) ** (1.0 / p))


def test_function_bank(mesh: Mesh) -> List[Tuple[np.ndarray, float]]:
    """Tensor bumps at three scales on the lattice center + s{-1, 0, 1}^n inside the box."""
    if mesh.kind != BOX:
        raise InvalidInputError("the residual bank is defined on box meshes")
    origin = mesh.origin()
    bank = []
    for fraction in BANK_SCALES:
        s = fraction * mesh.extent
        for offsets in np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * mesh.n, indexing="ij")).reshape(mesh.n, -1).T:
            if np.all(np.abs(offsets) * s + s <= mesh.extent + 1e-12):
                bank.append((origin + s * offsets, s))
    return bank


test_function_bank.__test__ = False


def _contract(grid: np.ndarray, factors: Sequence[np.ndarray]) -> float:
    result = grid
    for vector in reversed(factors):
        result = result @ vector
    return float(result)


def critical_residual(u: ScalarField, kappa: KappaLike, p: float) -> float:
    """max over the bump bank of |<-Delta_p u - kappa u^(p*-1), phi>| / ||grad phi||_p."""
    mesh = _require_box(u)
    n = mesh.n
    p_star = critical_exponent(n, p)
    if not np.any(u.values):
        return 0.0
    grad = gradient(u).components
    magnitude = np.linalg.norm(grad, axis=1)
    flux = (magnitude ** (p - 2.0))[:, None] * grad
    flux_grids = [flux[:, k].reshape(mesh.shape) for k in range(n)]
    load_grid = (_kappa_values(kappa, mesh) * np.abs(u.values) ** (p_star - 1.0)).reshape(mesh.shape)
    weights = axis_weights(mesh)
    reference = _unit_bump_gradient_norm(n, float(p))

    worst = 0.0
    for center, s in test_function_bank(mesh):
        values, slopes = [], []
        for k in range(n):
            v, d = _bump((mesh.axes[k] - center[k]) / s)
            values.append(v * weights[k])
            slopes.append(d / s * weights[k])
        load = _contract(load_grid, values)
        stiffness = sum(
            _contract(flux_grids[k], values[:k] + [slopes[k]] + values[k + 1:]) for k in range(n)
        )
        worst = max(worst, abs(stiffness - load) / (s ** (n / p - 1.0) * reference))
    return worst


@dataclass
class Kappa0Result:
    value: float
    gradient_form: float
    discrepancy: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def kappa0(u: ScalarField, kappa: KappaLike, p: float) -> Kappa0Result:
    """kappa_0 = int kappa u^p* / int u^p*, with the gradient form as a diagnostic."""
    mesh = u.mesh
    p_star = critical_exponent(mesh.n, p)
    mass = np.abs(u.values) ** p_star
    denominator = float(np.dot(mesh.weights, mass))
    if denominator <= 0:
        raise InvalidInputError("kappa0 needs a field with positive mass")
    value = float(np.dot(mesh.weights, _kappa_values(kappa, mesh) * mass)) / denominator
    if mesh.kind == BOX:
        parts = sobolev_parts(u, p)
        gradient_form = parts.gradient_total / parts.mass_total
    else:
        grad = gradient(u).magnitude().values
        gradient_form = float(np.dot(mesh.weights, grad ** p)) / denominator
    return Kappa0Result(value, gradient_form, abs(value - gradient_form))


def deficit_whole_space(u: ScalarField, kappa: KappaLike, p: float) -> float:
    """||(kappa - kappa_0) u^(p*-1)||_{L^(p*)'}."""
    mesh = u.mesh
    p_star = critical_exponent(mesh.n, p)
    k0 = kappa0(u, kappa, p).value
    q = conjugate(p_star)
    integrand = np.abs((_kappa_values(kappa, mesh) - k0) * np.abs(u.values) ** (p_star - 1.0)) ** q
    return float(np.dot(mesh.weights, integrand) ** (1.0 / q))


@dataclass
class DecayReport:
    c0_upper: float
    c0_lower: float
    c1_lower: float
    c1_upper: float
    r0: float
    mass: float
    mass_floor: float
    mass_floor_holds: bool
    sobolev_constant: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def decay_constants(u: ScalarField, p: float, kappa_sup: float = 1.0,
                    center: Optional[Sequence[float]] = None) -> DecayReport:
    """Extremize the decay ratios of u and |grad u| over the box and compute the mass floor.

    c0_upper / c0_lower bound u (1 + |x|^a), a = (n-p)/(p-1), from above and
    below; c1_lower bounds |grad u| |x|^((n-1)/(p-1)) from below beyond the
    onset radius r0 (first of 1, 2, 4, ... with a positive bound).
    """
    mesh = _require_box(u)
    n = mesh.n
    if not np.any(u.values):
        raise InvalidInputError("decay constants of the zero field are undefined")
    if kappa_sup <= 0:
        raise InvalidInputError(f"kappa_sup must be positive, got {kappa_sup}")
    p_star = critical_exponent(n, p)
    a = (n - p) / (p - 1.0)
    b = (n - 1.0) / (p - 1.0)
    origin = mesh.points[np.argmax(u.values)] if center is None else np.asarray(center, dtype=float)
    dist = np.linalg.norm(mesh.points - origin, axis=1)
    weighted = u.values * (1.0 + dist ** a)
    grad = gradient(u).magnitude().values

    c1_lower, r0 = 0.0, math.inf
    radius = 1.0
    while radius < mesh.extent:
        shell = dist >= radius
        if shell.any():
            bound = float(np.min(grad[shell] * dist[shell] ** b))
            if bound > 0:
                c1_lower, r0 = bound, radius
                break
        radius *= 2.0

    parts = sobolev_parts(u, p)
    mass = parts.mass_total ** (1.0 / p_star)
    s = talenti_constant(n, p)
    floor = s ** (p / (p_star - p)) * kappa_sup ** (-1.0 / (p_star - p))
    return DecayReport(
        c0_upper=float(weighted.max()),
        c0_lower=float(weighted.min()),
        c1_lower=c1_lower,
        c1_upper=float(np.max(grad * (1.0 + dist ** b))),
        r0=r0,
        mass=mass,
        mass_floor=floor,
        mass_floor_holds=bool(mass >= floor * (1.0 - MASS_FLOOR_RTOL)),
        sobolev_constant=s,
    )


def manufactured_coefficient(u: ScalarField, p: float) -> ScalarField:
    """kappa = -Delta_p u / u^(p*-1), so that u solves the critical equation exactly."""
    mesh = _require_box(u)
    p_star = critical_exponent(mesh.n, p)
    grad = gradient(u).components
    magnitude = np.linalg.norm(grad, axis=1)
    flux = (magnitude ** (p - 2.0))[:, None] * grad
    divergence = np.zeros(mesh.shape)
    for k in range(mesh.n):
        divergence += np.gradient(flux[:, k].reshape(mesh.shape), mesh.axes[k], axis=k, edge_order=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = -divergence.ravel() / np.abs(u.values) ** (p_star - 1.0)
    return ScalarField(mesh, kappa)


def perturbed_bubble(b: TalentiBubble, mesh: Mesh, epsilon: float,
                     direction: Optional[Sequence[float]] = None) -> ScalarField:
    """U + eps <d, x - z> exp(-|x - z|^2 / lambda^2), d defaulting to e_1."""
    d = np.zeros(b.n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        d[0] = 1.0
    offset = mesh.points - np.asarray(b.center)
    bump = (offset @ d) * np.exp(-np.sum(offset ** 2, axis=1) / b.scale ** 2)
    return ScalarField(mesh, b.evaluate(mesh.points) + epsilon * bump)
