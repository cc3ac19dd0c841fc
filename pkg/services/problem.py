"""Problem specifications: dimension, exponent, nonlinearity f and coefficient kappa.

f and kappa are tagged families rather than arbitrary callables so that the
structural hypotheses (f >= 0, kappa > 0, f(u) <= F u^(p-1)) can be checked
on samples. Families parse from compact strings such as ``power:1,2`` or
``affine:1,0.1``, the format the CLI accepts.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from config import EPS_REG_START, SOLVER_MAX_ITER, SOLVER_TOL
from services.domain import RADIAL, InvalidInputError, Mesh, ScalarField

logger = logging.getLogger(__name__)

F_FAMILIES = ("constant", "power", "tabulated")
KAPPA_FAMILIES = ("constant", "affine", "tabulated")


def _parse_table(body: str) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """``x0=y0,x1=y1,...`` into two tuples."""
    xs, ys = [], []
    for item in body.split(","):
        if "=" not in item:
            raise InvalidInputError(f"table entry {item!r} is not of the form x=y")
        x, y = item.split("=", 1)
        xs.append(float(x))
        ys.append(float(y))
    if len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise InvalidInputError("tables need at least two strictly increasing abscissae")
    return tuple(xs), tuple(ys)


def _split_family(text: str) -> Tuple[str, str]:
    family, _, body = text.strip().partition(":")
    return family.strip().lower(), body.strip()


@dataclass(frozen=True)
class Nonlinearity:
    """f(u): ``constant`` c, ``power`` F*u^q (q defaults to p-1) or ``tabulated``."""
    family: str = "constant"
    value: float = 1.0
    exponent: Optional[float] = None
    table_u: Tuple[float, ...] = ()
    table_f: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in F_FAMILIES:
            raise InvalidInputError(f"unknown f family {self.family!r}; expected one of {F_FAMILIES}")
        if self.family == "tabulated" and len(self.table_u) < 2:
            raise InvalidInputError("tabulated f needs at least two samples")
        if self.family == "power" and self.exponent is not None and self.exponent <= 0:
            raise InvalidInputError(f"power exponent must be positive, got {self.exponent}")

    @classmethod
    def parse(cls, text: str) -> "Nonlinearity":
        family, body = _split_family(text)
        try:
            if family == "constant":
                return cls("constant", float(body or 1.0))
            if family == "power":
                parts = [float(x) for x in body.split(",") if x.strip()] or [1.0]
                return cls("power", parts[0], parts[1] if len(parts) > 1 else None)
            if family == "tabulated":
                us, fs = _parse_table(body)
                return cls("tabulated", table_u=us, table_f=fs)
        except ValueError as e:
            raise InvalidInputError(f"cannot parse f {text!r}: {e}") from e
        raise InvalidInputError(f"unknown f family {family!r}; expected one of {F_FAMILIES}")

    def power_exponent(self, p: float) -> Optional[float]:
        if self.family != "power":
            return None
        return p - 1.0 if self.exponent is None else float(self.exponent)

    def is_zero(self) -> bool:
        if self.family == "tabulated":
            return not np.any(self.table_f)
        return self.value == 0.0

    def evaluate(self, u: np.ndarray, p: float) -> np.ndarray:
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        if self.family == "constant":
            return np.full_like(u, self.value)
        if self.family == "power":
            return self.value * u ** self.power_exponent(p)
        return np.interp(u, self.table_u, self.table_f)

    def primitive(self, u: np.ndarray, p: float) -> np.ndarray:
        """F(u) = int_0^u f with F(0) = 0."""
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        if self.family == "constant":
            return self.value * u
        if self.family == "power":
            q = self.power_exponent(p)
            return self.value * u ** (q + 1.0) / (q + 1.0)
        knots = np.unique(np.concatenate(([0.0], self.table_u)))
        values = np.interp(knots, self.table_u, self.table_f)
        cumulative = cumulative_trapezoid(values, knots, initial=0.0)
        inside = np.interp(np.minimum(u, knots[-1]), knots, cumulative)
        return inside + values[-1] * np.maximum(u - knots[-1], 0.0)

    def lipschitz(self, upper: float, p: float, samples: int = 2049) -> float:
        """Lipschitz constant of f on [0, upper]."""
        if self.family == "constant" or upper <= 0:
            return 0.0
        if self.family == "power":
            q = self.power_exponent(p)
            if q >= 1.0:
                return abs(self.value) * q * upper ** (q - 1.0)
        grid = np.linspace(0.0, upper, samples)
        slopes = np.abs(np.diff(self.evaluate(grid, p))) / np.diff(grid)
        return float(slopes.max())

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "value": self.value, "exponent": self.exponent,
                "table_u": list(self.table_u), "table_f": list(self.table_f)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Nonlinearity":
        return cls(data.get("family", "constant"), float(data.get("value", 1.0)),
                   data.get("exponent"), tuple(data.get("table_u", ())),
                   tuple(data.get("table_f", ())))


@dataclass(frozen=True)
class Coefficient:
    """kappa(x): ``constant``, ``affine`` base + eps*<d, x>, or radially ``tabulated``."""
    family: str = "constant"
    base: float = 1.0
    epsilon: float = 0.0
    direction: Tuple[float, ...] = ()
    table_r: Tuple[float, ...] = ()
    table_k: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in KAPPA_FAMILIES:
            raise InvalidInputError(
                f"unknown kappa family {self.family!r}; expected one of {KAPPA_FAMILIES}"
            )
        if self.family == "tabulated" and len(self.table_r) < 2:
            raise InvalidInputError("tabulated kappa needs at least two samples")

    @classmethod
    def parse(cls, text: str) -> "Coefficient":
        family, body = _split_family(text)
        try:
            if family == "constant":
                return cls("constant", float(body or 1.0))
            if family == "affine":
                parts = [float(x) for x in body.split(",") if x.strip()]
                if len(parts) < 2:
                    raise InvalidInputError("affine kappa needs base,epsilon[,direction...]")
                return cls("affine", parts[0], parts[1], tuple(parts[2:]))
            if family == "tabulated":
                rs, ks = _parse_table(body)
                return cls("tabulated", table_r=rs, table_k=ks)
        except ValueError as e:
            raise InvalidInputError(f"cannot parse kappa {text!r}: {e}") from e
        raise InvalidInputError(f"unknown kappa family {family!r}; expected one of {KAPPA_FAMILIES}")

    def is_radial(self) -> bool:
        return self.family != "affine" or self.epsilon == 0.0

    def direction_vector(self, n: int) -> np.ndarray:
        if not self.direction:
            d = np.zeros(n)
            d[-1] = 1.0
            return d
        d = np.asarray(self.direction, dtype=float)
        if d.size != n:
            raise InvalidInputError(f"kappa direction has {d.size} entries, expected {n}")
        return d

    def evaluate(self, points: np.ndarray, n: int) -> np.ndarray:
        """Values at an (m, d) array of points; radial meshes pass radii."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.family == "constant":
            return np.full(points.shape[0], self.base)
        if self.family == "tabulated":
            rho = np.linalg.norm(points, axis=1)
            return np.interp(rho, self.table_r, self.table_k)
        if points.shape[1] != n:
            if self.epsilon != 0.0:
                raise InvalidInputError("an affine kappa with epsilon != 0 is not radial")
            return np.full(points.shape[0], self.base)
        return self.base + self.epsilon * (points @ self.direction_vector(n))

    def field(self, mesh: Mesh) -> ScalarField:
        return ScalarField(mesh, self.evaluate(mesh.points, mesh.n))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "base": self.base, "epsilon": self.epsilon,
                "direction": list(self.direction), "table_r": list(self.table_r),
                "table_k": list(self.table_k)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Coefficient":
        return cls(data.get("family", "constant"), float(data.get("base", 1.0)),
                   float(data.get("epsilon", 0.0)), tuple(data.get("direction", ())),
                   tuple(data.get("table_r", ())), tuple(data.get("table_k", ())))


@dataclass(frozen=True)
class ProblemSpec:
    """-Delta_p u = kappa f(u) in the unit ball (or the critical problem in R^n)."""
    n: int
    p: float
    f: Nonlinearity = field(default_factory=Nonlinearity)
    kappa: Coefficient = field(default_factory=Coefficient)
    eps_reg: float = EPS_REG_START
    tol: float = SOLVER_TOL
    max_iter: int = SOLVER_MAX_ITER
    power_bound: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidInputError(f"dimension must be an integer >= 2, got {self.n}")
        if self.p <= 1:
            raise InvalidInputError(f"exponent p must exceed 1, got {self.p}")
        if self.tol <= 0 or self.max_iter < 1:
            raise InvalidInputError("tolerance must be positive and max_iter at least 1")
        if self.eps_reg <= 0:
            raise InvalidInputError(f"eps_reg must be positive, got {self.eps_reg}")

    @property
    def critical_exponent(self) -> Optional[float]:
        if self.p >= self.n:
            return None
        return self.n * self.p / (self.n - self.p)

    @property
    def supports_symmetry(self) -> bool:
        return self.p > 2

    def with_kappa(self, kappa: Coefficient) -> "ProblemSpec":
        return ProblemSpec(self.n, self.p, self.f, kappa, self.eps_reg, self.tol,
                           self.max_iter, self.power_bound)

    def check_hypotheses(self, mesh: Mesh, u_max: float = 10.0, samples: int = 513) -> None:
        """Reject f < 0, kappa <= 0, or a violated power bound on sampled values."""
        u = np.linspace(0.0, u_max, samples)
        fu = self.f.evaluate(u, self.p)
        if np.any(fu < 0):
            raise InvalidInputError(f"f is negative at u = {u[np.argmax(fu < 0)]:.6g}")
        if self.power_bound is not None:
            bound = self.power_bound * u ** (self.p - 1.0)
            bad = fu > bound * (1.0 + 1e-12) + 1e-300
            if np.any(bad):
                raise InvalidInputError(
                    f"f(u) <= {self.power_bound} u^(p-1) fails at u = {u[np.argmax(bad)]:.6g}"
                )
        points = mesh.points if mesh.kind != RADIAL else mesh.points[:, :1]
        kappa = self.kappa.evaluate(points, self.n)
        if np.any(kappa <= 0) or not np.all(np.isfinite(kappa)):
            where = points[np.argmax(~(kappa > 0))]
            raise InvalidInputError(f"kappa must be strictly positive; fails at {tuple(where)}")

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "p": self.p, "f": self.f.to_dict(), "kappa": self.kappa.to_dict(),
                "eps_reg": self.eps_reg, "tol": self.tol, "max_iter": self.max_iter,
                "power_bound": self.power_bound}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProblemSpec":
        f = data.get("f", {})
        kappa = data.get("kappa", {})
        return cls(
            n=int(data["n"]),
            p=float(data["p"]),
            f=Nonlinearity.parse(f) if isinstance(f, str) else Nonlinearity.from_dict(f),
            kappa=Coefficient.parse(kappa) if isinstance(kappa, str) else Coefficient.from_dict(kappa),
            eps_reg=float(data.get("eps_reg", EPS_REG_START)),
            tol=float(data.get("tol", SOLVER_TOL)),
            max_iter=int(data.get("max_iter", SOLVER_MAX_ITER)),
            power_bound=data.get("power_bound"),
        )


def critical_exponent(n: int, p: float) -> float:
    if not p < n:
        raise InvalidInputError(f"critical exponent needs p < n, got p={p}, n={n}")
    return n * p / (n - p)


def conjugate(q: float) -> float:
    return q / (q - 1.0) if not math.isinf(q) else 1.0
