"""Meshes, discrete fields, regions, quadrature and interpolation.

Three mesh kinds cover every experiment in the lab:

* ``radial-1d``: nodes on [0, 1] carrying shell-volume weights of the unit
  ball in R^n, used by the radial solver.
* ``polar-2d-disk``: an (r, theta) tensor grid of the closed unit disk. The
  pole row holds ``n_theta`` copies of the origin so that every field is a
  plain ``(n_r, n_theta)`` array; the boundary circle r = 1 is a grid row.
* ``box-nd``: a tensor grid of [c - R, c + R]^n, optionally graded towards
  the center with a sinh map, used for whole-space problems.

Fields and regions are immutable; every operation here is a pure function.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma

logger = logging.getLogger(__name__)

RADIAL = "radial-1d"
POLAR = "polar-2d-disk"
BOX = "box-nd"
MESH_KINDS = (RADIAL, POLAR, BOX)

# Points this close outside the region still count as inside.
INSIDE_SLACK = 1e-12


class LabError(Exception):
    """Base class for every error raised by the lab."""


class InvalidInputError(LabError, ValueError):
    """Input rejected before or during validation (CLI exit code 1)."""


class NumericalError(LabError, RuntimeError):
    """A numerical step failed (CLI exit code 2)."""


class EmptyRegionError(InvalidInputError):
    """A norm or extremum was requested over a region without nodes."""


class DegenerateMeshError(InvalidInputError):
    """The mesh has fewer nodes than the stencil needs."""


class OutsideRegionError(InvalidInputError):
    """Evaluation point outside the closed mesh region."""

    def __init__(self, point, message: Optional[str] = None):
        self.point = tuple(float(c) for c in np.atleast_1d(point))
        super().__init__(message or f"point {self.point} lies outside the mesh region")


class PreconditionError(InvalidInputError):
    """A check's precondition failed at a specific node."""

    def __init__(self, message: str, node=None):
        self.node = None if node is None else tuple(float(c) for c in np.atleast_1d(node))
        super().__init__(message if self.node is None else f"{message} at node {self.node}")


class ConfigError(InvalidInputError):
    """Experiment configuration does not match the schema."""

    def __init__(self, message: str, keys: Sequence[str] = ()):
        self.keys = tuple(keys)
        super().__init__(f"{message}: {', '.join(self.keys)}" if self.keys else message)


def sphere_area(n: int) -> float:
    """Surface measure |S^{n-1}| of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def ball_volume(n: int) -> float:
    return sphere_area(n) / n


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes, quadrature weights and grid structure of one discretized region.

    ``points`` has one row per node in C order of ``shape``. For the radial
    kind the single coordinate is the radius and ``n`` is the ambient
    dimension the weights integrate over.
    """
    kind: str
    n: int
    axes: Tuple[np.ndarray, ...]
    points: np.ndarray
    weights: np.ndarray
    shape: Tuple[int, ...]
    extent: float
    h: float
    grading: float = 0.0
    center: Tuple[float, ...] = field(default=())

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    @property
    def resolution(self) -> Tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def origin(self) -> np.ndarray:
        if self.kind == BOX:
            return np.asarray(self.center, dtype=float)
        return np.zeros(self.dim)

    def radii(self) -> np.ndarray:
        """Distance of every node from the mesh origin."""
        if self.kind == RADIAL:
            return np.abs(self.points[:, 0])
        return np.linalg.norm(self.points - self.origin(), axis=1)

    def boundary_mask(self) -> np.ndarray:
        """Nodes on the outer boundary of the region."""
        if self.kind == BOX:
            grid_index = np.indices(self.shape).reshape(len(self.shape), -1)
            last = np.array(self.shape)[:, None] - 1
            return np.any((grid_index == 0) | (grid_index == last), axis=0)
        mask = np.zeros(self.shape, dtype=bool)
        mask[-1, ...] = True
        return mask.reshape(-1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Mask of points inside the closed region."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == BOX:
            lo = np.array([a[0] for a in self.axes])
            hi = np.array([a[-1] for a in self.axes])
            return np.all((points >= lo - INSIDE_SLACK) & (points <= hi + INSIDE_SLACK), axis=1)
        return np.linalg.norm(points, axis=1) <= 1.0 + INSIDE_SLACK

    def metadata(self) -> Dict[str, Any]:
        meta = {"kind": self.kind, "n": self.n, "resolution": list(self.resolution),
                "extent": self.extent}
        if self.kind == BOX:
            meta["grading"] = self.grading
            meta["center"] = list(self.center)
        return meta

    def refined(self, factor: int = 2) -> "Mesh":
        """The same region with every cell split ``factor`` times per axis."""
        res = self.resolution
        if self.kind == RADIAL:
            return radial_mesh(self.n, (res[0] - 1) * factor + 1)
        if self.kind == POLAR:
            return disk_mesh((res[0] - 1) * factor + 1, res[1] * factor)
        return box_mesh(self.n, self.extent, (res[0] - 1) * factor + 1,
                        grading=self.grading, center=self.center)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _cell_edges(r: np.ndarray) -> np.ndarray:
    """Cell faces of a node row on [0, 1]: 0, the midpoints, 1."""
    return np.concatenate(([0.0], 0.5 * (r[1:] + r[:-1]), [1.0]))


def radial_mesh(n: int, nodes: int) -> Mesh:
    """Radial nodes on [0, 1] with exact shell volumes of the unit n-ball."""
    if n < 1:
        raise InvalidInputError(f"dimension must be positive, got {n}")
    if nodes < 3:
        raise DegenerateMeshError(f"radial mesh needs at least 3 nodes, got {nodes}")
    r = np.linspace(0.0, 1.0, nodes)
    edges = _cell_edges(r)
    weights = sphere_area(n) / n * (edges[1:] ** n - edges[:-1] ** n)
    return Mesh(kind=RADIAL, n=n, axes=(_freeze(r),), points=_freeze(r[:, None].copy()),
                weights=_freeze(weights), shape=(nodes,), extent=1.0, h=1.0 / (nodes - 1))


def disk_mesh(radial_nodes: int, angular_nodes: int) -> Mesh:
    """Polar tensor grid of the closed unit disk.

    Ring i >= 1 owns the annular cell between its neighbouring midpoints; the
    pole cell is the disk of radius r_1/2 shared by the n_theta pole copies.
    The weights add up to pi exactly up to rounding.
    """
    if radial_nodes < 3 or angular_nodes < 4:
        raise DegenerateMeshError(
            f"disk mesh needs >= 3 radial and >= 4 angular nodes, got {radial_nodes}x{angular_nodes}"
        )
    r = np.linspace(0.0, 1.0, radial_nodes)
    theta = 2.0 * np.pi * np.arange(angular_nodes) / angular_nodes
    edges = _cell_edges(r)
    ring_area = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    weights = np.repeat(ring_area / angular_nodes, angular_nodes)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    points = np.column_stack((rr.ravel() * np.cos(tt.ravel()), rr.ravel() * np.sin(tt.ravel())))
    d_theta = 2.0 * np.pi / angular_nodes
    return Mesh(kind=POLAR, n=2, axes=(_freeze(r), _freeze(theta)), points=_freeze(points),
                weights=_freeze(weights), shape=(radial_nodes, angular_nodes), extent=1.0,
                h=math.hypot(r[1] - r[0], d_theta))


def _box_axis(half_width: float, nodes: int, grading: float, offset: float) -> np.ndarray:
    s = np.linspace(-1.0, 1.0, nodes)
    if grading > 0:
        x = half_width * np.sinh(grading * s) / np.sinh(grading)
    else:
        x = half_width * s
    x[0], x[-1] = -half_width, half_width
    return x + offset


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def axis_weights(mesh: Mesh) -> Tuple[np.ndarray, ...]:
    """Per-axis trapezoid weights of a box mesh; their outer product is ``mesh.weights``."""
    if mesh.kind != BOX:
        raise InvalidInputError("axis weights exist for box meshes only")
    return tuple(_trapezoid_weights(a) for a in mesh.axes)


def box_mesh(n: int, half_width: float, nodes: int, grading: float = 0.0,
             center: Optional[Sequence[float]] = None) -> Mesh:
    """Tensor grid of the box ``center + [-R, R]^n`` with trapezoid weights.

    ``grading > 0`` clusters nodes near the center (sinh map); the weights
    then follow the nonuniform spacing.
    """
    if n < 2:
        raise InvalidInputError(f"box meshes need n >= 2, got {n}")
    if nodes < 3:
        raise DegenerateMeshError(f"box mesh needs at least 3 nodes per axis, got {nodes}")
    if half_width <= 0:
        raise InvalidInputError(f"box half-width must be positive, got {half_width}")
    center = tuple(float(c) for c in (center if center is not None else np.zeros(n)))
    if len(center) != n:
        raise InvalidInputError(f"box center has {len(center)} coordinates, expected {n}")
    axes = tuple(_freeze(_box_axis(half_width, nodes, grading, c)) for c in center)
    axis_weights = [_trapezoid_weights(a) for a in axes]
    weights = axis_weights[0]
    for w in axis_weights[1:]:
        weights = np.multiply.outer(weights, w)
    grids = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([g.ravel() for g in grids])
    spacing = max(float(np.max(np.diff(a))) for a in axes)
    return Mesh(kind=BOX, n=n, axes=axes, points=_freeze(points),
                weights=_freeze(np.asarray(weights).ravel()), shape=(nodes,) * n,
                extent=float(half_width), h=math.sqrt(n) * spacing, grading=float(grading),
                center=center)


def mesh_from_metadata(meta: Dict[str, Any]) -> Mesh:
    """Rebuild a mesh from its sidecar metadata."""
    kind = meta.get("kind")
    resolution = meta.get("resolution") or []
    if kind == RADIAL:
        return radial_mesh(int(meta["n"]), int(resolution[0]))
    if kind == POLAR:
        return disk_mesh(int(resolution[0]), int(resolution[1]))
    if kind == BOX:
        return box_mesh(int(meta["n"]), float(meta["extent"]), int(resolution[0]),
                        grading=float(meta.get("grading", 0.0)), center=meta.get("center"))
    raise InvalidInputError(f"unknown mesh kind {kind!r}; expected one of {MESH_KINDS}")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One value per mesh node."""
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.mesh.size:
            raise InvalidInputError(
                f"field has {values.size} values for a mesh of {self.mesh.size} nodes"
            )
        object.__setattr__(self, "values", _freeze(values))

    @classmethod
    def from_function(cls, mesh: Mesh, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(mesh, np.broadcast_to(fn(mesh.points), (mesh.size,)))

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "ScalarField":
        return cls(mesh, np.full(mesh.size, float(value)))

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.mesh.shape)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.mesh, values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """One Cartesian vector per mesh node (radial meshes: d/dr only)."""
    mesh: Mesh
    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        if comps.ndim != 2 or comps.shape[0] != self.mesh.size:
            raise InvalidInputError(f"vector field shape {comps.shape} does not match the mesh")
        object.__setattr__(self, "components", _freeze(comps))

    def magnitude(self) -> ScalarField:
        return ScalarField(self.mesh, np.linalg.norm(self.components, axis=1))


@dataclass(frozen=True, eq=False)
class Region:
    """A node mask on a mesh. Set operations act on the masks."""
    mesh: Mesh
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool).reshape(-1)
        if mask.size != self.mesh.size:
            raise InvalidInputError("region mask does not match the mesh")
        object.__setattr__(self, "mask", _freeze(mask))

    @classmethod
    def whole(cls, mesh: Mesh) -> "Region":
        return cls(mesh, np.ones(mesh.size, dtype=bool))

    def _other(self, other: "Region") -> np.ndarray:
        if other.mesh is not self.mesh:
            raise InvalidInputError("regions live on different meshes")
        return other.mask

    def __and__(self, other: "Region") -> "Region":
        return Region(self.mesh, self.mask & self._other(other))

    def __or__(self, other: "Region") -> "Region":
        return Region(self.mesh, self.mask | self._other(other))

    def __invert__(self) -> "Region":
        return Region(self.mesh, ~self.mask)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    @property
    def measure(self) -> float:
        return float(self.mesh.weights[self.mask].sum())

    def boundary_nodes(self) -> "Region":
        """Nodes of the region with a grid neighbour outside it.

        The outer boundary of the mesh counts as outside; the pole of a disk
        and the center of a radial mesh have no inner neighbour.
        """
        m = self.mask.reshape(self.mesh.shape)
        edge = np.zeros_like(m)
        for axis in range(m.ndim):
            periodic = self.mesh.kind == POLAR and axis == 1
            for shift in (1, -1):
                neighbour = np.roll(m, shift, axis=axis)
                if not periodic:
                    index = [slice(None)] * m.ndim
                    index[axis] = 0 if shift == 1 else -1
                    neighbour[tuple(index)] = (
                        self.mesh.kind in (POLAR, RADIAL) and axis == 0 and shift == 1
                    )
                edge |= m & ~neighbour
        return Region(self.mesh, edge.reshape(-1))


def ball_region(mesh: Mesh, center: Sequence[float], radius: float) -> Region:
    if mesh.kind == RADIAL:
        if np.any(np.asarray(center, dtype=float) != 0):
            raise InvalidInputError("radial meshes only support balls about the origin")
        return Region(mesh, mesh.radii() <= radius + INSIDE_SLACK)
    dist = np.linalg.norm(mesh.points - np.asarray(center, dtype=float), axis=1)
    return Region(mesh, dist <= radius + INSIDE_SLACK)


def annulus_region(mesh: Mesh, center: Sequence[float], inner: float, outer: float) -> Region:
    if mesh.kind == RADIAL:
        dist = mesh.radii()
    else:
        dist = np.linalg.norm(mesh.points - np.asarray(center, dtype=float), axis=1)
    return Region(mesh, (dist >= inner - INSIDE_SLACK) & (dist <= outer + INSIDE_SLACK))


def half_space_region(mesh: Mesh, omega: Sequence[float], level: float) -> Region:
    """Nodes with <omega, x> > level (open half-space)."""
    if mesh.kind == RADIAL:
        raise InvalidInputError("half-spaces need a polar or box mesh")
    return Region(mesh, mesh.points @ np.asarray(omega, dtype=float) > level)


def _mask(mesh: Mesh, region: Optional[Region]) -> np.ndarray:
    if region is None:
        return np.ones(mesh.size, dtype=bool)
    if region.mesh is not mesh:
        raise InvalidInputError("region and field live on different meshes")
    return region.mask


def _require_nodes(mesh: Mesh, region: Optional[Region]) -> np.ndarray:
    mask = _mask(mesh, region)
    if not mask.any():
        raise EmptyRegionError("region contains no mesh nodes")
    return mask


def integrate(u: ScalarField, region: Optional[Region] = None) -> float:
    mask = _mask(u.mesh, region)
    return float(np.dot(u.mesh.weights[mask], u.values[mask]))


def lq_norm(u: ScalarField, q: float, region: Optional[Region] = None) -> float:
    """(sum w |u|^q)^(1/q) over the region; max |u| for q = inf.

    Exponents in (0, 1) give the quasi-norm used by the weak Harnack check.
    """
    mask = _require_nodes(u.mesh, region)
    vals = np.abs(u.values[mask])
    if math.isinf(q):
        return float(vals.max())
    if q <= 0:
        raise InvalidInputError(f"norm exponent must be positive, got {q}")
    return float(np.dot(u.mesh.weights[mask], vals ** q) ** (1.0 / q))


def oscillation(kappa: ScalarField, region: Optional[Region] = None) -> float:
    mask = _require_nodes(kappa.mesh, region)
    return float(np.ptp(kappa.values[mask]))


def _spectral_theta_derivative(grid: np.ndarray) -> np.ndarray:
    nt = grid.shape[1]
    k = np.fft.rfftfreq(nt, d=1.0 / nt)
    multiplier = 1j * k
    if nt % 2 == 0:
        multiplier[-1] = 0.0
    return np.fft.irfft(np.fft.rfft(grid, axis=1) * multiplier, n=nt, axis=1)


def gradient(u: ScalarField) -> VectorField:
    """Second-order nodal gradient, one-sided at the region boundary.

    On the disk the radial derivative is a finite difference, the angular one
    is spectral (exact on trigonometric polynomials), and the pole gradient is
    the least-squares plane through the first ring.
    """
    mesh = u.mesh
    if min(mesh.resolution) < 3:
        raise DegenerateMeshError(f"gradient needs >= 3 nodes per axis, got {mesh.resolution}")
    if mesh.kind == RADIAL:
        du = np.gradient(u.values, mesh.axes[0], edge_order=2)
        return VectorField(mesh, du[:, None])
    if mesh.kind == POLAR:
        r, theta = mesh.axes
        grid = u.grid()
        du_dr = np.gradient(grid, r, axis=0, edge_order=2)
        du_dt = _spectral_theta_derivative(grid)
        cos, sin = np.cos(theta)[None, :], np.sin(theta)[None, :]
        inv_r = np.zeros_like(r)
        inv_r[1:] = 1.0 / r[1:]
        gx = cos * du_dr - sin * du_dt * inv_r[:, None]
        gy = sin * du_dr + cos * du_dt * inv_r[:, None]
        ring = grid[1] - grid[0, 0]
        scale = 2.0 / (len(theta) * r[1])
        gx[0, :] = scale * np.dot(ring, cos[0])
        gy[0, :] = scale * np.dot(ring, sin[0])
        return VectorField(mesh, np.column_stack((gx.ravel(), gy.ravel())))
    parts = np.gradient(u.grid(), *mesh.axes, edge_order=2)
    return VectorField(mesh, np.column_stack([g.ravel() for g in parts]))


def _barycentric(p0, p1, p2, x):
    v0, v1, v2 = p1 - p0, p2 - p0, x - p0
    den = v0[:, 0] * v1[:, 1] - v1[:, 0] * v0[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        b1 = (v2[:, 0] * v1[:, 1] - v1[:, 0] * v2[:, 1]) / den
        b2 = (v0[:, 0] * v2[:, 1] - v2[:, 0] * v0[:, 1]) / den
    return 1.0 - b1 - b2, b1, b2


def _interpolate_polar(u: ScalarField, pts: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation on the polar cells split into triangles.

    Each cell between rings i, i+1 and rays j, j+1 is split along its
    diagonal; pole cells are already triangles. Affine fields are reproduced
    exactly inside the triangulated disk.
    """
    mesh = u.mesh
    r, theta = mesh.axes
    nr, nt = mesh.shape
    rho = np.hypot(pts[:, 0], pts[:, 1])
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    i = np.clip(np.searchsorted(r, rho, side="right") - 1, 0, nr - 2)
    j = np.floor(phi / (2.0 * np.pi / nt)).astype(int) % nt
    j1 = (j + 1) % nt
    nodes = mesh.points.reshape(nr, nt, 2)
    vals = u.grid()
    a, b, c, d = nodes[i, j], nodes[i + 1, j], nodes[i + 1, j1], nodes[i, j1]
    first = _barycentric(a, b, c, pts)
    second = _barycentric(a, c, d, pts)
    use_second = (i > 0) & (np.minimum.reduce(second) > np.minimum.reduce(first))
    v_first = first[0] * vals[i, j] + first[1] * vals[i + 1, j] + first[2] * vals[i + 1, j1]
    v_second = second[0] * vals[i, j] + second[1] * vals[i + 1, j1] + second[2] * vals[i, j1]
    return np.where(use_second, v_second, v_first)


def _interpolate(u: ScalarField, pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mesh = u.mesh
    if mesh.kind == RADIAL:
        rho = np.linalg.norm(pts, axis=1)
        outside = rho > 1.0 + INSIDE_SLACK
        return np.interp(np.minimum(rho, 1.0), mesh.axes[0], u.values), outside
    if pts.shape[1] != mesh.dim:
        raise InvalidInputError(f"points have {pts.shape[1]} coordinates, mesh has {mesh.dim}")
    outside = ~mesh.contains(pts)
    if mesh.kind == POLAR:
        return _interpolate_polar(u, pts), outside
    lo = np.array([a[0] for a in mesh.axes])
    hi = np.array([a[-1] for a in mesh.axes])
    interpolator = RegularGridInterpolator(mesh.axes, u.grid(), method="linear",
                                           bounds_error=False, fill_value=None)
    return interpolator(np.clip(pts, lo, hi)), outside


def interpolate_many(u: ScalarField, points: np.ndarray, outside: str = "raise") -> np.ndarray:
    """Interpolate at an (m, d) array of points.

    ``outside='nan'`` marks points outside the region with NaN instead of
    raising; callers decide how to extend the field there.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise InvalidInputError(f"expected an (m, d) array of points, got shape {pts.shape}")
    values, mask = _interpolate(u, pts)
    if mask.any():
        if outside == "raise":
            raise OutsideRegionError(pts[np.argmax(mask)])
        values = np.where(mask, np.nan, values)
    return values


def interpolate(u: ScalarField, point) -> float:
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    values, mask = _interpolate(u, pts)
    if mask[0]:
        raise OutsideRegionError(point)
    return float(values[0])


def dump_field(u: ScalarField, path: Union[str, Path]) -> Path:
    """Write ``x1,...,xd,value`` rows plus a JSON sidecar with the mesh metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join([f"x{k + 1}" for k in range(u.mesh.dim)] + ["value"])
    np.savetxt(path, np.column_stack((u.mesh.points, u.values)), fmt="%.17g",
               delimiter=",", header=header, comments="")
    path.with_suffix(".json").write_text(json.dumps(u.mesh.metadata(), indent=2, sort_keys=True))
    return path


def load_field(path: Union[str, Path]) -> ScalarField:
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise InvalidInputError(f"missing mesh sidecar {sidecar}")
    mesh = mesh_from_metadata(json.loads(sidecar.read_text()))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (mesh.size, mesh.dim + 1):
        raise InvalidInputError(f"{path} has shape {data.shape}, expected {(mesh.size, mesh.dim + 1)}")
    if not np.allclose(data[:, :-1], mesh.points, rtol=0.0, atol=1e-12):
        raise InvalidInputError(f"{path} coordinates do not match the mesh in {sidecar}")
    return ScalarField(mesh, data[:, -1])
