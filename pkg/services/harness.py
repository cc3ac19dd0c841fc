"""Experiment configs, the run dispatcher, result records and the verify suite.

A run directory is ``<output_dir>/<kind>-<hash12>`` and holds only files
derived from the config and its seed, so reruns are byte-identical.
Timestamps live on the in-memory record and in the logs.
"""
import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import (
    BOX_GRADING,
    BOX_NODES,
    DISK_ANGULAR_NODES,
    DISK_RADIAL_NODES,
    LAB_OUTPUT_DIR,
    LAB_SEED,
    R_BOX_FACTOR,
    RADIAL_NODES,
    SCAN_LEVELS,
    THRESHOLD_C3,
    WRITE_FIELDS,
)
from services.bubbles import (
    TalentiBubble,
    critical_residual,
    decay_constants,
    deficit_whole_space,
    kappa0,
    sobolev_parts,
    talenti_constant,
)
from services.domain import (
    ConfigError,
    InvalidInputError,
    LabError,
    Region,
    ScalarField,
    box_mesh,
    disk_mesh,
    dump_field,
    load_field,
    radial_mesh,
)
from services.inequalities import (
    HarnackConfig,
    check_weighted_poincare,
    check_weighted_sobolev,
    exponent_2M,
    fundamental_ineq_check,
    grad_integrability,
    harnack_radius_factor,
    small_domain_comparison,
    weight_condition_constant,
    weight_report,
)
from services.moving_planes import (
    LogLawFit,
    analyze,
    angular_oscillation,
    approximate_center,
    default_threshold,
    fit_log_law,
    grid_spacing,
    lipschitz,
    log_law,
    run_sweep,
)
from services.problem import ProblemSpec
from services.solver import solve_dirichlet_2d, solve_radial, torsion_profile, verify_apriori

logger = logging.getLogger(__name__)

KINDS = ("single-solve", "bubble-report", "ball-sweep", "space-sweep", "verify-suite")
SWEEP_KINDS = {"ball-sweep": "ball", "space-sweep": "space"}
CONFIG_KEYS = {"kind", "problem", "epsilons", "mesh", "thresholds", "checks", "fit", "bubble",
               "output_dir", "seed"}
MESH_KEYS = {"solver", "resolution", "radial_nodes", "angular_nodes", "box_nodes",
             "box_half_width", "box_grading"}
THRESHOLD_KEYS = {"c3", "levels"}
BUBBLE_KEYS = {"center", "scale"}


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def _number(value: float) -> str:
    return f"{value:.17g}"


@dataclass
class ExperimentConfig:
    kind: str
    problem: ProblemSpec
    epsilons: List[float] = field(default_factory=list)
    mesh: Dict[str, Any] = field(default_factory=dict)
    thresholds: Dict[str, Any] = field(default_factory=dict)
    checks: List[str] = field(default_factory=list)
    fit: bool = True
    bubble: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = LAB_OUTPUT_DIR
    seed: int = LAB_SEED

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Validate a parsed JSON config; every offending key is listed in the error."""
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        bad = sorted(set(data) - CONFIG_KEYS)
        for name, allowed in (("mesh", MESH_KEYS), ("thresholds", THRESHOLD_KEYS), ("bubble", BUBBLE_KEYS)):
            section = data.get(name, {})
            if not isinstance(section, dict):
                bad.append(name)
            else:
                bad.extend(f"{name}.{key}" for key in sorted(set(section) - allowed))
        if "kind" not in data:
            bad.append("kind")
        elif data["kind"] not in KINDS:
            bad.append("kind")
        if "problem" not in data:
            bad.append("problem")
        if bad:
            raise ConfigError(f"invalid config keys: {', '.join(bad)}", bad)
        try:
            problem = ProblemSpec.from_dict(data["problem"])
        except (InvalidInputError, KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid problem: {e}", ["problem"]) from e
        try:
            config = cls(
                kind=data["kind"],
                problem=problem,
                epsilons=[float(e) for e in data.get("epsilons", [])],
                mesh=dict(data.get("mesh", {})),
                thresholds=dict(data.get("thresholds", {})),
                checks=[str(c) for c in data.get("checks", [])],
                fit=bool(data.get("fit", True)),
                bubble=dict(data.get("bubble", {})),
                output_dir=str(data.get("output_dir", LAB_OUTPUT_DIR)),
                seed=int(data.get("seed", LAB_SEED)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config value: {e}", ["epsilons", "seed"]) from e
        config.validate()
        return config

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}", ["--config"]) from e
        return cls.from_dict(data)

    def validate(self) -> None:
        bad: List[str] = []
        problems: List[str] = []
        if self.kind in SWEEP_KINDS:
            if not self.epsilons:
                bad.append("epsilons")
                problems.append("a sweep needs a non-empty epsilon list")
            elif any(e < 0 or not math.isfinite(e) for e in self.epsilons):
                bad.append("epsilons")
                problems.append("epsilons must be finite and non-negative")
            elif self.fit and (any(e <= 0 for e in self.epsilons)
                               or any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:]))):
                bad.append("epsilons")
                problems.append("a log fit needs strictly positive, strictly decreasing epsilons")
        if self.kind == "ball-sweep" and self.problem.n != 2:
            bad.append("problem.n")
            problems.append("the ball sweep runs on the disk (n = 2)")
        if self.kind in ("space-sweep", "bubble-report") and not 2 < self.problem.p < self.problem.n:
            bad.append("problem.p")
            problems.append("whole-space experiments need 2 < p < n")
        solver = self.mesh.get("solver")
        if solver is not None and solver not in ("radial", "disk"):
            bad.append("mesh.solver")
            problems.append("mesh.solver must be 'radial' or 'disk'")
        for key in ("resolution", "radial_nodes", "angular_nodes", "box_nodes", "levels"):
            section = self.thresholds if key == "levels" else self.mesh
            if key in section and (int(section[key]) != section[key] or section[key] < 2):
                bad.append(f"{'thresholds' if key == 'levels' else 'mesh'}.{key}")
                problems.append(f"{key} must be an integer >= 2")
        if self.kind == "verify-suite":
            unknown = [c for c in self.checks if c not in VERIFY_CHECKS]
            if unknown:
                bad.append("checks")
                problems.append(f"unknown checks: {', '.join(unknown)}")
        if self.seed < 0:
            bad.append("seed")
            problems.append("seed must be non-negative")
        if bad:
            raise ConfigError("; ".join(problems), bad)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "problem": self.problem.to_dict(),
            "epsilons": list(self.epsilons),
            "mesh": dict(sorted(self.mesh.items())),
            "thresholds": dict(sorted(self.thresholds.items())),
            "checks": list(self.checks),
            "fit": self.fit,
            "bubble": dict(sorted(self.bubble.items())),
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    @property
    def config_hash(self) -> str:
        """sha256 over every field except the output directory."""
        payload = self.to_dict()
        payload.pop("output_dir")
        return hashlib.sha256(json.dumps(_jsonable(payload), sort_keys=True).encode()).hexdigest()

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / f"{self.kind}-{self.config_hash[:12]}"

    def disk(self):
        """Polar mesh; ``resolution`` sets the radial nodes and twice as many angles when the node keys are absent."""
        resolution = self.mesh.get("resolution")
        radial = int(self.mesh.get("radial_nodes", resolution or DISK_RADIAL_NODES))
        angular = int(self.mesh.get("angular_nodes", 2 * (int(resolution) - 1) if resolution else DISK_ANGULAR_NODES))
        return disk_mesh(radial, angular)

    def box(self, center: Optional[Sequence[float]] = None):
        """Box of half-width ``box_half_width`` for the unit-scale bubbles of the space sweep."""
        return box_mesh(self.problem.n, self.box_factor, self.box_nodes,
                        grading=self.box_grading, center=center)

    def bubble_box(self, bubble: TalentiBubble):
        return bubble.mesh(self.box_nodes, self.box_grading, self.box_factor)

    @property
    def box_factor(self) -> float:
        return float(self.mesh.get("box_half_width", R_BOX_FACTOR))

    @property
    def box_nodes(self) -> int:
        return int(self.mesh.get("box_nodes", BOX_NODES))

    @property
    def box_grading(self) -> float:
        return float(self.mesh.get("box_grading", BOX_GRADING))

    @property
    def c3(self) -> float:
        return float(self.thresholds.get("c3", THRESHOLD_C3))

    @property
    def levels(self) -> int:
        return int(self.thresholds.get("levels", SCAN_LEVELS))


@dataclass
class ResultRecord:
    kind: str
    config_hash: str
    seed: int
    run_dir: str
    outputs: Dict[str, Any] = field(default_factory=dict)
    samples: List[Dict[str, Any]] = field(default_factory=list)
    dropped: List[Dict[str, Any]] = field(default_factory=list)
    fit: Optional[Dict[str, Any]] = None
    artifacts: List[str] = field(default_factory=list)
    started_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None

    def to_dict(self) -> Dict[str, Any]:
        """Serializable view; timestamps are left out."""
        return _jsonable({
            "kind": self.kind,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "run_dir": self.run_dir,
            "outputs": self.outputs,
            "samples": self.samples,
            "dropped": self.dropped,
            "fit": self.fit,
            "artifacts": sorted(self.artifacts),
        })

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultRecord":
        return cls(kind=data["kind"], config_hash=data["config_hash"], seed=int(data["seed"]),
                   run_dir=data["run_dir"], outputs=data.get("outputs", {}),
                   samples=data.get("samples", []), dropped=data.get("dropped", []),
                   fit=data.get("fit"), artifacts=data.get("artifacts", []))

    @classmethod
    def load(cls, path) -> "ResultRecord":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as e:
            raise InvalidInputError(f"cannot read record {path}: {e}") from e


def _solve(config: ExperimentConfig, record: ResultRecord, run_dir: Path) -> None:
    spec = config.problem
    solver = config.mesh.get("solver", "disk" if spec.n == 2 else "radial")
    if solver == "disk":
        report = solve_dirichlet_2d(spec, config.disk())
    else:
        report = solve_radial(spec, int(config.mesh.get("resolution", RADIAL_NODES)))
    record.outputs["solve"] = report.to_dict()
    if report.converged:
        record.outputs["apriori"] = verify_apriori(report.solution, spec).to_dict()
    if WRITE_FIELDS:
        dump_field(report.solution, run_dir / "solution.csv")
        record.artifacts.extend(["solution.csv", "solution.json"])


def _bubble_report(config: ExperimentConfig, record: ResultRecord, run_dir: Path) -> None:
    n, p = config.problem.n, config.problem.p
    center = tuple(config.bubble.get("center", (0.0,) * n))
    bubble = TalentiBubble(center, float(config.bubble.get("scale", 1.0)), n, p)
    mesh = config.bubble_box(bubble)
    u = bubble.field(mesh)
    parts = sobolev_parts(u, p)
    record.outputs.update({
        "bubble": {"center": list(bubble.center), "scale": bubble.scale,
                   "amplitude": bubble.amplitude, "constant": bubble.constant},
        "mesh": mesh.metadata(),
        "sobolev": parts.to_dict(),
        "talenti_constant": talenti_constant(n, p),
        "critical_residual": critical_residual(u, 1.0, p),
        "kappa0": kappa0(u, 1.0, p).to_dict(),
        "deficit": deficit_whole_space(u, 1.0, p),
        "decay": decay_constants(u, p, center=center).to_dict(),
    })
    if WRITE_FIELDS:
        dump_field(u, run_dir / "bubble.csv")
        record.artifacts.extend(["bubble.csv", "bubble.json"])


def _sweep(config: ExperimentConfig, record: ResultRecord, run_dir: Path) -> None:
    family = SWEEP_KINDS[config.kind]
    mesh = config.disk() if family == "ball" else config.box()
    result = run_sweep(config.problem, family, config.epsilons, mesh=mesh, c3=config.c3,
                       levels=config.levels, seed=config.seed)
    n = mesh.dim
    header = ["epsilon", "deficit"] + [f"lambda_star_{k + 1}" for k in range(n)] + ["osc", "rot_deficit"]
    rows = []
    for sample in result.samples:
        report = sample.report
        rows.append([sample.epsilon, sample.deficit] + [report.lambda_star(k) for k in range(n)]
                    + [report.angular_oscillation, report.rotation.gradient])
        record.samples.append({"epsilon": sample.epsilon, "deficit": sample.deficit,
                               "deviation": sample.deviation, "report": report.to_dict()})
    record.dropped = [{"epsilon": eps, "reason": reason} for eps, reason in result.dropped]
    path = run_dir / "sweep.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_number(v) for v in row])
    record.artifacts.append("sweep.csv")
    if config.fit:
        record.fit = result.fit.to_dict() if result.fit is not None else None
        _write_json(run_dir / "fit.json", record.fit if record.fit is not None
                    else {"error": result.fit_error})
        record.artifacts.append("fit.json")


def _verify(config: ExperimentConfig, record: ResultRecord, run_dir: Path) -> None:
    verdicts = run_verify(config.checks or list(VERIFY_CHECKS), config.seed)
    for verdict in verdicts:
        _write_json(run_dir / "verdicts" / f"{verdict['check']}.json", verdict)
        record.artifacts.append(f"verdicts/{verdict['check']}.json")
    with (run_dir / "summary.csv").open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["check", "passed", "error"])
        for verdict in verdicts:
            writer.writerow([verdict["check"], verdict["passed"], verdict.get("error", "")])
    record.artifacts.append("summary.csv")
    record.outputs["verdicts"] = verdicts
    record.outputs["passed"] = all(v["passed"] for v in verdicts)


RUNNERS: Dict[str, Callable[[ExperimentConfig, ResultRecord, Path], None]] = {
    "single-solve": _solve,
    "bubble-report": _bubble_report,
    "ball-sweep": _sweep,
    "space-sweep": _sweep,
    "verify-suite": _verify,
}


def run(config: ExperimentConfig) -> ResultRecord:
    """Execute the configured pipeline and write its artifacts into ``config.run_dir``."""
    config.validate()
    run_dir = config.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    record = ResultRecord(config.kind, config.config_hash, config.seed, str(run_dir),
                          started_at=datetime.now(timezone.utc))
    logger.info(f"Running {config.kind} (config {config.config_hash[:12]}, seed {config.seed})")
    _write_json(run_dir / "config.json", config.to_dict())
    record.artifacts.append("config.json")
    try:
        RUNNERS[config.kind](config, record, run_dir)
    except LabError as e:
        logger.error(f"{config.kind} run {config.config_hash[:12]} failed: {e}", exc_info=e)
        raise
    record.artifacts.append("record.json")
    _write_json(run_dir / "record.json", record.to_dict())
    record.finished_at = datetime.now(timezone.utc)
    elapsed = (record.finished_at - record.started_at).total_seconds()
    logger.info(f"Finished {config.kind} in {elapsed:.1f}s; artifacts in {run_dir}")
    return record


def plot_points(record: ResultRecord) -> Tuple[np.ndarray, np.ndarray, np.ndarray, LogLawFit]:
    if record.fit is None:
        raise InvalidInputError("record has no log-law fit")
    fit = LogLawFit.from_dict(record.fit)
    usable = [(s["deficit"], s["deviation"]) for s in record.samples
              if 0 < s["deficit"] < 1 and s["deviation"] > 0]
    if len(usable) < 2:
        raise InvalidInputError(f"plot data needs at least 2 usable samples, got {len(usable)}")
    d = np.array([u[0] for u in usable])
    s = np.array([u[1] for u in usable])
    return np.log(np.abs(np.log(d))), np.log(np.abs(np.log(fit.c * d))), np.log(s), fit


def emit_plot_data(record: ResultRecord, directory=None) -> List[Path]:
    """Write plot.csv (log|log d|, log|log(C d)|, log s) and line.json for the fitted law.

    On the x axis log|log(C d)| the law is the line y = log C - alpha x.
    """
    x_raw, x, y, fit = plot_points(record)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    directory = Path(directory or record.run_dir)
    directory.mkdir(parents=True, exist_ok=True)
    plot_path = directory / "plot.csv"
    with plot_path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["log_abs_log_d", "log_abs_log_cd", "log_s"])
        for row in zip(x_raw, x, y):
            writer.writerow([_number(v) for v in row])
    line_path = _write_json(directory / "line.json", {
        "slope": float(slope), "intercept": float(intercept), "residual": residual,
        "C": fit.c, "alpha": fit.alpha,
    })
    logger.info(f"Plot data: {len(x)} points, collinearity residual {residual:.3e}")
    return [plot_path, line_path]


def fit_from_csv(path) -> LogLawFit:
    """Fit the log law to a CSV with ``deficit`` and ``deviation`` (or ``osc``) columns."""
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e
    if not rows:
        raise InvalidInputError(f"{path} has no samples")
    column = "deviation" if "deviation" in rows[0] else "osc"
    if "deficit" not in rows[0] or column not in rows[0]:
        raise InvalidInputError(f"{path} needs 'deficit' and 'deviation' (or 'osc') columns")
    samples = [(float(r["deficit"]), float(r[column])) for r in rows]
    return fit_log_law([s for s in samples if s[0] > 0])


def analyze_field(path, p: float, deficit: float = 0.0, out=None, seed: int = LAB_SEED,
                  levels: int = SCAN_LEVELS, decay_exponent: Optional[float] = None) -> Dict[str, Any]:
    """Moving-planes report of a dumped field, written next to it or into ``out``."""
    u = load_field(path)
    report = analyze(u, p, deficit, levels=levels, seed=seed, decay_exponent=decay_exponent).to_dict()
    target = Path(out) if out else Path(path).parent
    _write_json(target / f"{Path(path).stem}-moving-planes.json", report)
    return report


# Verify suite

VERIFY_CHECKS: Dict[str, Callable[[int], Dict[str, Any]]] = {}


def register(name: str):
    def wrap(fn):
        VERIFY_CHECKS[name] = fn
        return fn
    return wrap


@register("radial-exactness")
def _check_radial_exactness(seed: int) -> Dict[str, Any]:
    errors = {}
    for p in (2.0, 3.0):
        report = solve_radial(ProblemSpec(2, p), 1000)
        r = report.solution.mesh.axes[0]
        errors[p] = float(np.max(np.abs(report.solution.values - torsion_profile(2, p, r))))
    worst = max(errors.values())
    return {"passed": worst <= 1e-4, "measured": errors, "expected": 1e-4}


@register("fundamental-inequalities")
def _check_fundamental(seed: int) -> Dict[str, Any]:
    results = [fundamental_ineq_check(p, 200_000, seed) for p in (2.0, 2.5, 3.0, 4.0)]
    return {"passed": all(r.holds for r in results),
            "measured": {str(r.p): r.empirical for r in results},
            "expected": {str(r.p): r.reference for r in results}}


@register("exponent-2M")
def _check_exponent_2m(seed: int) -> Dict[str, Any]:
    value = exponent_2M(4, 3.0)
    grid = [exponent_2M(n, p) for n in range(2, 7) for p in (2.1, 2.5, 3.0, 5.0, 10.0)]
    return {"passed": abs(value - 8.0 / 3.0) < 1e-12 and min(grid) > 2.0,
            "measured": value, "expected": 8.0 / 3.0}


@register("weight-condition")
def _check_weight_condition(seed: int) -> Dict[str, Any]:
    mesh = disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
    value = weight_condition_constant(ScalarField.constant(mesh, 1.0), 1.5).value
    return {"passed": abs(value - math.pi) <= 1e-4, "measured": value, "expected": math.pi}


def polynomial_bump_bank(mesh, count: int, seed: int) -> List[ScalarField]:
    """Random quadratic polynomials times (1 - |x|^2)^2 on the disk."""
    rng = np.random.default_rng(seed)
    x, y = mesh.points[:, 0], mesh.points[:, 1]
    bump = np.maximum(1.0 - x ** 2 - y ** 2, 0.0) ** 2
    monomials = np.column_stack((np.ones_like(x), x, y, x * x, x * y, y * y))
    return [ScalarField(mesh, (monomials @ rng.standard_normal(6)) * bump) for _ in range(count)]


@register("weighted-sobolev")
def _check_weighted_sobolev(seed: int) -> Dict[str, Any]:
    mesh = disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
    rho = ScalarField.constant(mesh, 1.0)
    report = weight_report(rho, 1.5, 2.0)
    ratios = [check_weighted_sobolev(rho, v, 2.0, report) for v in polynomial_bump_bank(mesh, 100, seed)]
    worst = max(r.ratio for r in ratios)
    return {"passed": all(r.passed for r in ratios), "measured": worst, "expected": report.c_s}


@register("weighted-poincare")
def _check_weighted_poincare(seed: int) -> Dict[str, Any]:
    mesh = disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
    rho = ScalarField.constant(mesh, 1.0)
    x2 = mesh.points[:, 1]
    outcomes = []
    for level in (0.2, 0.4, 0.6):
        cap = Region(mesh, x2 > level)
        v = ScalarField(mesh, np.where(x2 > level, (x2 - level) * (1.0 - np.sum(mesh.points ** 2, axis=1)), 0.0))
        report = weight_report(rho, 1.5, 2.0, region=cap)
        outcomes.append(check_weighted_poincare(rho, v, report, 0.5, 3.0, region=cap))
    shrinking = all(b.c_p < a.c_p for a, b in zip(outcomes, outcomes[1:]))
    return {"passed": all(o.passed for o in outcomes) and shrinking,
            "measured": [o.to_dict() for o in outcomes], "expected": "lhs <= rhs, C_P decreasing"}


@register("small-domain-comparison")
def _check_small_domain(seed: int) -> Dict[str, Any]:
    mesh = disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
    r2 = np.sum(mesh.points ** 2, axis=1)
    u1 = ScalarField(mesh, (1.0 - r2) / 2.0)
    u2 = ScalarField(mesh, (1.0 - r2) / 4.0)
    check = small_domain_comparison(u1, u2, Region.whole(mesh), np.full(mesh.size, 2.0),
                                    np.full(mesh.size, 1.0))
    return {"passed": abs(check.k_hat - 0.25) < 1e-12, "measured": check.k_hat, "expected": 0.25}


@register("harnack-radius")
def _check_harnack_radius(seed: int) -> Dict[str, Any]:
    config = HarnackConfig(n=2, p=2.5, s=1.0, q=8.0, frak_q=4.0, c_flat=0.5, c_natural=2.0)
    at_one = harnack_radius_factor(config, 1.0)
    at_tenth = harnack_radius_factor(config, 0.1)
    return {"passed": abs(at_one - 0.25) < 1e-12 and at_tenth < at_one,
            "measured": {"M(1)": at_one, "M(0.1)": at_tenth}, "expected": 0.25}


@register("grad-integrability")
def _check_grad_integrability(seed: int) -> Dict[str, Any]:
    mesh = radial_mesh(2, 2001)
    u = ScalarField(mesh, torsion_profile(2, 3.0, mesh.axes[0]))
    result = grad_integrability(u, 0.5, 3.0)
    expected = 4.0 * math.pi * math.sqrt(2.0) / 3.0
    return {"passed": abs(result.value - expected) <= 1e-3 * expected,
            "measured": result.value, "expected": expected}


@register("log-law-inversion")
def _check_log_law(seed: int) -> Dict[str, Any]:
    d = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    fit = fit_log_law(list(zip(d, log_law(d, 2.0, 0.5))))
    return {"passed": abs(fit.c - 2.0) <= 1e-4 and abs(fit.alpha - 0.5) <= 1e-4,
            "measured": fit.to_dict(), "expected": {"C": 2.0, "alpha": 0.5}}


@register("sobolev-quotient-invariance")
def _check_quotient_invariance(seed: int) -> Dict[str, Any]:
    n, p = 3, 2.5
    quotients = []
    for center, scale in (((0.0, 0.0, 0.0), 1.0), ((0.5, 0.0, 0.0), 1.0), ((0.0, -1.0, 2.0), 0.5),
                          ((1.0, 1.0, 1.0), 2.0), ((-0.3, 0.2, 0.0), 1.5)):
        bubble = TalentiBubble(center, scale, n, p)
        quotients.append(sobolev_parts(bubble.field(bubble.mesh(17, factor=10.0)), p).value)
    spread = (max(quotients) - min(quotients)) / min(quotients)
    return {"passed": spread <= 1e-3, "measured": quotients, "expected": "relative spread <= 1e-3"}


@register("bubble-residual")
def _check_bubble_residual(seed: int) -> Dict[str, Any]:
    n, p = 3, 2.5
    bubble = TalentiBubble.standard(n, p)
    residuals = [critical_residual(bubble.field(box_mesh(n, 4.0, nodes)), 1.0, p) for nodes in (13, 25)]
    return {"passed": residuals[1] < residuals[0], "measured": residuals,
            "expected": "decreasing under refinement"}


@register("center-recovery")
def _check_center_recovery(seed: int) -> Dict[str, Any]:
    n, p = 3, 2.5
    z = np.array([0.3, -0.2, 0.0])
    bubble = TalentiBubble(tuple(z), 1.0, n, p)
    mesh = box_mesh(n, 3.0, 25)
    u = bubble.field(mesh)
    estimate = approximate_center(u, levels=120, decay_exponent=bubble.decay_exponent)
    error = float(np.max(np.abs(estimate.center - z)))
    return {"passed": error <= 2.0 * grid_spacing(mesh), "measured": estimate.center.tolist(),
            "expected": z.tolist()}


@register("radial-symmetry")
def _check_radial_symmetry(seed: int) -> Dict[str, Any]:
    mesh = disk_mesh(DISK_RADIAL_NODES, DISK_ANGULAR_NODES)
    report = solve_dirichlet_2d(ProblemSpec(2, 3.0), mesh)
    u = report.solution
    estimate = approximate_center(u, default_threshold(u).value, levels=100)
    osc = angular_oscillation(u, estimate.center, seed=seed)
    bound = 3.0 * mesh.h * lipschitz(u)
    return {"passed": report.converged and osc <= bound, "measured": osc, "expected": bound}


def run_verify(names: Sequence[str], seed: int = LAB_SEED) -> List[Dict[str, Any]]:
    """Run registered checks; a failing or crashing check becomes a verdict, never an exception."""
    verdicts = []
    for name in names:
        if name not in VERIFY_CHECKS:
            raise ConfigError(f"unknown check {name!r}", ["checks"])
        began = time.perf_counter()
        try:
            outcome = VERIFY_CHECKS[name](seed)
            verdict = {"check": name, "passed": bool(outcome["passed"]),
                       "measured": outcome.get("measured"), "expected": outcome.get("expected")}
        except Exception as e:
            logger.error(f"Check {name} raised: {e}", exc_info=e)
            verdict = {"check": name, "passed": False, "error": type(e).__name__, "message": str(e)}
        logger.info(f"Check {name}: {'passed' if verdict['passed'] else 'FAILED'} "
                    f"({time.perf_counter() - began:.1f}s)")
        verdicts.append(_jsonable(verdict))
    return verdicts
