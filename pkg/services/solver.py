"""Discrete weak solutions of -Delta_p u = kappa f(u) in the unit ball.

Two discretizations share one damped fixed-point driver:

* radial: finite volumes on shells. The flux through the sphere of radius
  r_{i+1/2} balances the source in the shells inside it, so one application
  of the map solves the frozen-source problem exactly.
* disk: finite volumes on the polar grid with the regularized coefficient
  (eps^2 + |grad u|^2)^((p-2)/2) frozen per Picard step (Kacanov iteration);
  the linear systems go through scipy.sparse.

Power nonlinearities F*u^q run a normalized iteration w <- T(w)/max T(w).
For q != p-1 the fixed point is rescaled to the solution; for q = p-1 the
problem is homogeneous and the report carries the scale mu with
-Delta_p u = kappa (mu F) u^(p-1), max u = 1.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from config import (
    DAMPING_MIN,
    DAMPING_START,
    DISK_ANGULAR_NODES,
    DISK_RADIAL_NODES,
    EPS_REG_FACTOR,
    EPS_REG_FLOOR,
    GRADIENT_FLOOR,
    RADIAL_NODES,
)
from services.domain import (
    BOX,
    POLAR,
    RADIAL,
    InvalidInputError,
    Mesh,
    NumericalError,
    ScalarField,
    disk_mesh,
    gradient,
    radial_mesh,
    sphere_area,
)
from services.problem import Nonlinearity, ProblemSpec

logger = logging.getLogger(__name__)

POSITIVITY_SLACK = 1e-10
HOLDER_EXPONENT = 0.5


@dataclass
class SolveReport:
    """Outcome of one solve. ``converged`` implies ``residual <= tolerance``."""
    solution: ScalarField
    residual: float
    iterations: int
    energy: float
    converged: bool
    positive: bool
    tolerance: float
    mode: str = "fixed"
    eigenvalue: Optional[float] = None
    eps_reg: float = 0.0
    energy_monotone: bool = True
    energy_history: List[float] = field(default_factory=list)

    def effective_f(self, spec: ProblemSpec) -> Nonlinearity:
        """The nonlinearity the returned solution actually solves."""
        if self.eigenvalue is None:
            return spec.f
        return Nonlinearity("power", spec.f.value * self.eigenvalue, spec.f.exponent)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residual": self.residual,
            "iterations": self.iterations,
            "energy": self.energy,
            "converged": self.converged,
            "positive": self.positive,
            "tolerance": self.tolerance,
            "mode": self.mode,
            "eigenvalue": self.eigenvalue,
            "eps_reg": self.eps_reg,
            "energy_monotone": self.energy_monotone,
            "max_value": float(self.solution.values.max()),
            "mesh": self.solution.mesh.metadata(),
        }


@dataclass
class AprioriReport:
    c1: float
    gradient_sup: float
    holder_proxy: float
    alpha_star: float
    alpha_fitted: float
    c2: float
    c2_boundary: float
    c3: float
    c_flat: float
    delta0: float
    delta1: float
    barrier_b: float
    barrier_beta: float
    barrier_ok: bool
    barrier_violations: int
    normal_derivative_floor: float
    boundary_gradient_min: float
    gradient_layer_ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _phi_inverse(t: np.ndarray, p: float) -> np.ndarray:
    return np.sign(t) * np.abs(t) ** (1.0 / (p - 1.0))


def _phi(s: np.ndarray, p: float) -> np.ndarray:
    return np.sign(s) * np.abs(s) ** (p - 1.0)


def _rescale(w: np.ndarray, c: float, p: float, q: float,
             degree: float) -> Tuple[np.ndarray, Optional[float]]:
    """Map the normalized fixed point T(w) = c*w to (solution, eigen scale).

    ``degree`` is d in -Delta_p w = c^(-d) kappa F w^q at the fixed point:
    p-1 for the radial map, which solves the p-Laplacian exactly, and 1 for
    the disk map, whose operator is frozen at w and so is linear in the source.
    """
    mu = c ** (-degree)
    if abs(q - (p - 1.0)) < 1e-12:
        return w, mu
    t = mu ** (-1.0 / (p - 1.0 - q))
    return t * w, None


def _is_monotone(history: List[float], rtol: float = 1e-8) -> bool:
    return all(b <= a + rtol * max(abs(a), abs(b), 1e-300) for a, b in zip(history, history[1:]))


class _DampingController:
    """Damping 0.5, doubled after 3 residual decreases (cap 1), halved on increase."""

    def __init__(self):
        self.omega = DAMPING_START
        self.streak = 0
        self.previous = math.inf

    def reset(self):
        self.previous = math.inf
        self.streak = 0

    def should_reject(self, residual: float) -> bool:
        return residual > self.previous * (1.0 + 1e-3) and self.omega > DAMPING_MIN

    def reject(self) -> None:
        self.streak = 0
        self.omega = max(self.omega / 2.0, DAMPING_MIN)

    def update(self, residual: float) -> None:
        if residual < self.previous:
            self.streak += 1
            if self.streak >= 3:
                self.omega = min(1.0, 2.0 * self.omega)
                self.streak = 0
        else:
            self.streak = 0
            self.omega = max(self.omega / 2.0, DAMPING_MIN)
        self.previous = residual


class _RadialOperator:
    """Shell finite volumes for -(r^(n-1) phi_p(u'))' = r^(n-1) s on [0, 1]."""

    def __init__(self, mesh: Mesh):
        r = mesh.axes[0]
        self.r = r
        self.h = float(r[1] - r[0])
        self.area = (0.5 * (r[1:] + r[:-1])) ** (mesh.n - 1)
        self.volume = mesh.weights / sphere_area(mesh.n)

    def loads(self, source: np.ndarray) -> np.ndarray:
        return self.volume[:-1] * source[:-1]

    def apply_map(self, source: np.ndarray, p: float) -> np.ndarray:
        """Solution of the frozen-source problem with u(1) = 0."""
        flux = np.cumsum(self.loads(source)) / self.area
        slope = -_phi_inverse(flux, p)
        u = np.zeros_like(self.r)
        u[:-1] = np.cumsum((-self.h * slope)[::-1])[::-1]
        return u

    def residual(self, u: np.ndarray, source: np.ndarray, p: float) -> float:
        """Relative l1 residual of the cell balances (nodal test functions)."""
        flux = self.area * _phi(np.diff(u) / self.h, p)
        balance = -np.diff(np.concatenate(([0.0], flux))) - self.loads(source)
        scale = np.abs(self.loads(source)).sum()
        return float(np.abs(balance).sum() / scale) if scale > 0 else float(np.abs(balance).sum())


class _DiskOperator:
    """Polar finite volumes; unknowns are the pole and the interior rings."""

    def __init__(self, mesh: Mesh):
        r, theta = mesh.axes
        nr, nt = mesh.shape
        self.mesh = mesh
        self.r = r
        self.nr, self.nt = nr, nt
        self.dr = float(r[1] - r[0])
        self.dt = 2.0 * math.pi / nt
        edges = np.concatenate(([0.0], 0.5 * (r[1:] + r[:-1]), [1.0]))
        self.radial_factor = edges[1:nr] * self.dt / self.dr
        self.angular_factor = np.zeros(nr)
        self.angular_factor[1:] = (edges[2:] - edges[1:-1]) / (r[1:] * self.dt)
        self.index = np.zeros((nr, nt), dtype=int)
        self.index[1:nr - 1] = 1 + np.arange((nr - 2) * nt).reshape(nr - 2, nt)
        self.size = 1 + (nr - 2) * nt
        weights = mesh.weights.reshape(nr, nt)
        self.cell_volume = np.concatenate(([weights[0].sum()], weights[1:nr - 1].ravel()))

    def to_grid(self, x: np.ndarray) -> np.ndarray:
        grid = np.zeros((self.nr, self.nt))
        grid[0] = x[0]
        grid[1:-1] = x[1:].reshape(self.nr - 2, self.nt)
        return grid

    def from_grid(self, grid: np.ndarray) -> np.ndarray:
        return np.concatenate(([grid[0].mean()], grid[1:-1].ravel()))

    def coefficients(self, grid: np.ndarray, eps: float, p: float) -> Tuple[np.ndarray, np.ndarray]:
        """Face values of (eps^2 + |grad u|^2)^((p-2)/2) on radial and angular faces."""
        r = self.r
        du_dr = np.gradient(grid, r, axis=0)
        du_dt = np.zeros_like(grid)
        du_dt[1:] = (np.roll(grid, -1, axis=1) - np.roll(grid, 1, axis=1))[1:] / (2.0 * self.dt * r[1:, None])
        normal_r = np.diff(grid, axis=0) / self.dr
        tangential_r = 0.5 * (du_dt[:-1] + du_dt[1:])
        a_radial = (eps ** 2 + normal_r ** 2 + tangential_r ** 2) ** ((p - 2.0) / 2.0)
        a_angular = np.ones_like(grid)
        normal_t = (np.roll(grid, -1, axis=1) - grid)[1:] / (r[1:, None] * self.dt)
        tangential_t = 0.5 * (du_dr + np.roll(du_dr, -1, axis=1))[1:]
        a_angular[1:] = (eps ** 2 + normal_t ** 2 + tangential_t ** 2) ** ((p - 2.0) / 2.0)
        return a_radial, a_angular

    def matrix(self, a_radial: np.ndarray, a_angular: np.ndarray):
        rows, cols, vals = [], [], []

        def couple(left, right, t):
            rows.extend((left, right, left, right))
            cols.extend((left, right, right, left))
            vals.extend((t, t, -t, -t))

        for i in range(self.nr - 1):
            t = a_radial[i] * self.radial_factor[i]
            if i + 1 == self.nr - 1:
                rows.append(self.index[i])
                cols.append(self.index[i])
                vals.append(t)
            else:
                couple(self.index[i], self.index[i + 1], t)
        for i in range(1, self.nr - 1):
            t = a_angular[i] * self.angular_factor[i]
            couple(self.index[i], np.roll(self.index[i], -1), t)
        matrix = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(self.size, self.size))
        return matrix.tocsr()

    def rhs(self, source_grid: np.ndarray) -> np.ndarray:
        return self.cell_volume * self.from_grid(source_grid)

    def residual(self, x: np.ndarray, source_grid: np.ndarray, eps: float, p: float) -> float:
        grid = self.to_grid(x)
        matrix = self.matrix(*self.coefficients(grid, eps, p))
        b = self.rhs(source_grid)
        scale = np.abs(b).sum()
        balance = np.abs(matrix @ x - b).sum()
        return float(balance / scale) if scale > 0 else float(balance)


def energy(u: ScalarField, spec: ProblemSpec, f_scale: float = 1.0) -> float:
    """J(u) = int |grad u|^p / p - kappa F(u) on a ball mesh."""
    mesh = u.mesh
    if mesh.kind == BOX:
        raise InvalidInputError("energy is defined on ball meshes (radial or disk)")
    grad = gradient(u).magnitude().values
    points = mesh.points if mesh.kind == POLAR else mesh.points[:, :1]
    kappa = spec.kappa.evaluate(points, spec.n)
    integrand = grad ** spec.p / spec.p - kappa * f_scale * spec.f.primitive(u.values, spec.p)
    return float(np.dot(mesh.weights, integrand))


def _zero_report(mesh: Mesh, spec: ProblemSpec, mode: str) -> SolveReport:
    logger.info("f vanishes identically; returning the trivial solution")
    return SolveReport(solution=ScalarField.constant(mesh, 0.0), residual=0.0, iterations=0,
                       energy=0.0, converged=True, positive=True, tolerance=spec.tol, mode=mode,
                       eps_reg=spec.eps_reg)


def _finish(mesh: Mesh, values: np.ndarray, spec: ProblemSpec, residual: float, iterations: int,
            mode: str, eigenvalue: Optional[float], eps: float, history: List[float]) -> SolveReport:
    solution = ScalarField(mesh, values)
    converged = residual <= spec.tol
    f_scale = 1.0 if eigenvalue is None else eigenvalue
    report = SolveReport(
        solution=solution,
        residual=residual,
        iterations=iterations,
        energy=energy(solution, spec, f_scale),
        converged=converged,
        positive=bool(values.min() >= -POSITIVITY_SLACK),
        tolerance=spec.tol,
        mode=mode,
        eigenvalue=eigenvalue,
        eps_reg=eps,
        energy_monotone=_is_monotone(history),
        energy_history=history,
    )
    if converged:
        logger.info(f"{mesh.kind} solve converged in {iterations} iterations (residual {residual:.3e})")
    else:
        logger.warning(f"{mesh.kind} solve stopped after {iterations} iterations with residual {residual:.3e}")
    if history:
        if report.energy_monotone:
            logger.info(f"energy non-increasing over {len(history)} accepted iterates (J = {history[-1]:.6e})")
        else:
            logger.warning(f"energy not monotone over {len(history)} accepted iterates (J = {history[-1]:.6e})")
    return report


def solve_radial(spec: ProblemSpec, resolution: int = RADIAL_NODES) -> SolveReport:
    """Radial solution on [0, 1] by damped fixed point on the integrated form."""
    if not spec.kappa.is_radial():
        raise InvalidInputError("radial mode needs a radial kappa")
    mesh = radial_mesh(spec.n, resolution)
    spec.check_hypotheses(mesh)
    op = _RadialOperator(mesh)
    kappa = spec.kappa.evaluate(mesh.points, spec.n)
    q = spec.f.power_exponent(spec.p)
    mode = "fixed" if q is None else "normalized"
    if spec.f.is_zero():
        return _zero_report(mesh, spec, mode)

    damping = _DampingController()
    history: List[float] = []
    residual = math.inf
    eigenvalue = None
    if q is None:
        u = np.zeros_like(op.r)
        for iteration in range(1, spec.max_iter + 1):
            target = op.apply_map(kappa * spec.f.evaluate(u, spec.p), spec.p)
            u = u + damping.omega * (target - u)
            residual = op.residual(u, kappa * spec.f.evaluate(u, spec.p), spec.p)
            history.append(energy(ScalarField(mesh, u), spec))
            damping.update(residual)
            if residual <= spec.tol:
                break
        return _finish(mesh, u, spec, residual, iteration, mode, None, spec.eps_reg, history)

    w = op.apply_map(kappa, spec.p)
    w /= w.max()
    u = w
    for iteration in range(1, spec.max_iter + 1):
        image = op.apply_map(kappa * spec.f.value * w ** q, spec.p)
        c = float(image.max())
        if not c > 0:
            raise NumericalError("normalized iteration collapsed to zero")
        w = w + damping.omega * (image / c - w)
        w /= w.max()
        u, eigenvalue = _rescale(w, c, spec.p, q, spec.p - 1.0)
        f_scale = eigenvalue if eigenvalue is not None else 1.0
        residual = op.residual(u, kappa * f_scale * spec.f.value * np.maximum(u, 0.0) ** q, spec.p)
        history.append(energy(ScalarField(mesh, u), spec, f_scale))
        damping.update(residual)
        if residual <= spec.tol:
            break
    return _finish(mesh, u, spec, residual, iteration, mode, eigenvalue, spec.eps_reg, history)


def solve_dirichlet_2d(spec: ProblemSpec, mesh: Optional[Mesh] = None) -> SolveReport:
    """Damped Picard iteration on the regularized operator over the polar disk mesh.

    eps_reg starts at ``spec.eps_reg`` and is divided by EPS_REG_FACTOR each
    time the residual reaches the tolerance or stalls, down to EPS_REG_FLOOR.
    The reported residual is measured at the final eps_reg.
    """
    mesh = mesh or disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
    if mesh.kind != POLAR:
        raise InvalidInputError(f"disk solver needs a {POLAR} mesh, got {mesh.kind}")
    if spec.n != 2:
        raise InvalidInputError(f"disk solver works in dimension 2, got n={spec.n}")
    if spec.p < 2:
        raise InvalidInputError(f"disk solver needs p >= 2, got p={spec.p}")
    spec.check_hypotheses(mesh)
    op = _DiskOperator(mesh)
    kappa = spec.kappa.field(mesh).grid()
    q = spec.f.power_exponent(spec.p)
    mode = "fixed" if q is None else "normalized"
    if spec.f.is_zero():
        return _zero_report(mesh, spec, mode)

    ones = np.ones((op.nr, op.nt))
    x = spsolve(op.matrix(ones, ones), op.rhs(kappa))
    if q is not None:
        x = x / x.max()

    def source(values_grid: np.ndarray, f_scale: float) -> np.ndarray:
        if q is None:
            return kappa * spec.f.evaluate(values_grid, spec.p)
        return kappa * f_scale * spec.f.value * np.maximum(values_grid, 0.0) ** q

    eps = max(spec.eps_reg, EPS_REG_FLOOR)
    damping = _DampingController()
    history: List[float] = []
    stage_best, stage_age = math.inf, 0
    residual = math.inf
    eigenvalue = None
    u = x
    iteration = 0
    while iteration < spec.max_iter:
        iteration += 1
        grid = op.to_grid(x)
        matrix = op.matrix(*op.coefficients(grid, eps, spec.p))
        if q is None:
            image = spsolve(matrix, op.rhs(source(grid, 1.0)))
            candidate = x + damping.omega * (image - x)
            candidate_u, candidate_mu = candidate, None
        else:
            image = spsolve(matrix, op.rhs(source(grid, 1.0)))
            c = float(image.max())
            if not c > 0:
                raise NumericalError("normalized iteration collapsed to zero")
            candidate = x + damping.omega * (image / c - x)
            candidate = candidate / candidate.max()
            candidate_u, candidate_mu = _rescale(candidate, c, spec.p, q, 1.0)
        f_scale = 1.0 if candidate_mu is None else candidate_mu
        candidate_residual = op.residual(candidate_u, source(op.to_grid(candidate_u), f_scale),
                                         eps, spec.p)
        if damping.should_reject(candidate_residual):
            damping.reject()
            continue
        damping.update(candidate_residual)
        x, u, eigenvalue, residual = candidate, candidate_u, candidate_mu, candidate_residual
        history.append(energy(ScalarField(mesh, op.to_grid(u).ravel()), spec, f_scale))

        if residual < 0.95 * stage_best:
            stage_best, stage_age = residual, 0
        else:
            stage_age += 1
        if eps > EPS_REG_FLOOR and (residual <= spec.tol or stage_age >= 5):
            eps = max(eps / EPS_REG_FACTOR, EPS_REG_FLOOR)
            stage_best, stage_age = math.inf, 0
            damping.reset()
            logger.debug(f"eps_reg lowered to {eps:.1e} at iteration {iteration}")
            continue
        if eps <= EPS_REG_FLOOR and residual <= spec.tol:
            break

    values = op.to_grid(u).ravel()
    return _finish(mesh, values, spec, residual, iteration, mode, eigenvalue, eps, history)


def _holder_quotients(mesh: Mesh, grad: np.ndarray, step: int = 1) -> np.ndarray:
    """|grad u(x) - grad u(y)| and |x - y| over grid-neighbour pairs ``step`` apart."""
    pts = mesh.points.reshape(mesh.shape + (mesh.dim,))
    g = grad.reshape(mesh.shape + (grad.shape[1],))
    diffs, dists = [], []
    for axis in range(len(mesh.shape)):
        if mesh.shape[axis] <= step:
            continue
        index_a = [slice(None)] * len(mesh.shape)
        index_b = [slice(None)] * len(mesh.shape)
        index_a[axis] = slice(None, -step)
        index_b[axis] = slice(step, None)
        dg = np.linalg.norm(g[tuple(index_a)] - g[tuple(index_b)], axis=-1).ravel()
        dx = np.linalg.norm(pts[tuple(index_a)] - pts[tuple(index_b)], axis=-1).ravel()
        diffs.append(dg)
        dists.append(dx)
    dg, dx = np.concatenate(diffs), np.concatenate(dists)
    keep = dx > 1e-14
    return dg[keep], dx[keep]


def verify_apriori(u: ScalarField, spec: ProblemSpec, delta1: Optional[float] = None) -> AprioriReport:
    """Measure the a-priori constants of a converged ball solution and test the barrier.

    The barrier Psi(r) = B (exp(beta (1 - r)) - 1) with
    beta = (n-1)/((p-1)(1-delta1)) and Psi(1 - delta1) = min u on B_{1-delta1}
    must stay below u on the annulus 1 - delta1 <= |x| <= 1.
    """
    mesh = u.mesh
    if mesh.kind == BOX:
        raise InvalidInputError("verify_apriori works on ball meshes")
    n, p = mesh.n, spec.p
    values = u.values
    radii = mesh.radii()
    grad = gradient(u).components
    grad_norm = np.linalg.norm(grad, axis=1)

    dg, dx = _holder_quotients(mesh, grad)
    holder = float(np.max(dg / dx ** HOLDER_EXPONENT))
    gradient_sup = float(grad_norm.max())
    c1 = gradient_sup + holder
    steps, peaks = [], []
    for step in (1, 2, 4):
        dg_s, dx_s = _holder_quotients(mesh, grad, step)
        if dg_s.size and dg_s.max() > 0:
            steps.append(np.log(np.median(dx_s)))
            peaks.append(np.log(dg_s.max()))
    alpha_fitted = float(np.polyfit(steps, peaks, 1)[0]) if len(steps) >= 2 else float("nan")

    interior = radii < 1.0 - 1e-12
    ratio = values[interior] / (1.0 - radii[interior])
    c2 = 1.0 / float(ratio.min()) if ratio.min() > 0 else math.inf
    if mesh.kind == RADIAL:
        ring = np.zeros(mesh.size, dtype=bool)
        ring[-2] = True
    else:
        ring = np.zeros(mesh.shape, dtype=bool)
        ring[-2] = True
        ring = ring.ravel()
    ring_ratio = values[ring] / (1.0 - radii[ring])
    c2_boundary = 1.0 / float(ring_ratio.min()) if ring_ratio.min() > 0 else math.inf

    c0 = float(values.max())
    if delta1 is None:
        delta1 = 0.5 if c0 * c1 <= 0 else min(0.5, 1.0 / (2.0 * c0 * c1))
        delta1 = min(delta1, max(1.0 - float(radii[np.argmax(values)]), 1e-3))
    core = radii <= 1.0 - delta1 + 1e-12
    c_flat = float(values[core].min())
    c3 = c0 / c_flat if c_flat > 0 else math.inf

    beta = (n - 1.0) / ((p - 1.0) * (1.0 - delta1))
    barrier_b = c_flat / math.expm1(beta * delta1)
    annulus = radii >= 1.0 - delta1 - 1e-12
    psi = barrier_b * np.expm1(beta * (1.0 - radii[annulus]))
    violations = int(np.count_nonzero(psi > values[annulus] + POSITIVITY_SLACK * max(c0, 1.0)))
    if violations:
        logger.warning(f"barrier exceeds the solution at {violations} annulus nodes")

    floor = beta * barrier_b
    delta0 = min(delta1, (floor / c1) ** (1.0 / HOLDER_EXPONENT)) if c1 > 0 else delta1
    layer = radii > 1.0 - delta0
    flat = layer & (grad_norm <= GRADIENT_FLOOR)
    layer_ok = not flat.any()
    if not layer_ok:
        delta0 = max(1.0 - float(radii[flat].max()), 1e-12)
        logger.warning(f"critical points inside the boundary layer; delta0 shrunk to {delta0:.3e}")
    boundary = mesh.boundary_mask()

    return AprioriReport(
        c1=c1,
        gradient_sup=gradient_sup,
        holder_proxy=holder,
        alpha_star=HOLDER_EXPONENT,
        alpha_fitted=alpha_fitted,
        c2=c2,
        c2_boundary=c2_boundary,
        c3=c3,
        c_flat=c_flat,
        delta0=delta0,
        delta1=delta1,
        barrier_b=barrier_b,
        barrier_beta=beta,
        barrier_ok=violations == 0,
        barrier_violations=violations,
        normal_derivative_floor=floor,
        boundary_gradient_min=float(grad_norm[boundary].min()),
        gradient_layer_ok=layer_ok,
    )


def barrier(r: np.ndarray, b: float, beta: float) -> np.ndarray:
    """Psi(r) = B (exp(beta (1 - r)) - 1); vanishes at r = 1."""
    return b * np.expm1(beta * (1.0 - np.asarray(r, dtype=float)))


def torsion_profile(n: int, p: float, r) -> np.ndarray:
    """Solution of -Delta_p u = 1 in B_1, u = 0 on the sphere: ((p-1)/p) n^(-1/(p-1)) (1 - r^(p/(p-1)))."""
    r = np.asarray(r, dtype=float)
    return (p - 1.0) / p * n ** (-1.0 / (p - 1.0)) * (1.0 - r ** (p / (p - 1.0)))
