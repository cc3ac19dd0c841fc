"""Command-line entry point of the moving-planes lab.

Exit codes: 0 on success, 1 for invalid input or configuration,
2 for numerical failures (no convergence, degenerate fits).
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import LAB_LOG_LEVEL, LAB_OUTPUT_DIR, LAB_SEED, SCAN_LEVELS
from services.domain import InvalidInputError, NumericalError
from services.harness import (
    VERIFY_CHECKS,
    ExperimentConfig,
    ResultRecord,
    analyze_field,
    emit_plot_data,
    fit_from_csv,
    run,
)
from services.report import ReportFormatter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Quantitative moving planes for the p-Laplacian")
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--out", default=None, help=f"output directory (default {LAB_OUTPUT_DIR})")
    parser.add_argument("--seed", type=int, default=None, help=f"random seed (default {LAB_SEED})")
    parser.add_argument("--log-level", default=LAB_LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one Dirichlet problem on the ball")
    solve.add_argument("--n", type=int, default=2)
    solve.add_argument("--p", type=float, default=3.0)
    solve.add_argument("--f", default="constant:1", help="e.g. constant:1, power:1,2")
    solve.add_argument("--kappa", default="constant:1", help="e.g. constant:1, affine:1,0.1")
    solve.add_argument("--mode", choices=("radial", "disk"), default=None,
                       help="radial shells or the 2-D disk (default: disk for n = 2)")
    solve.add_argument("--resolution", type=int, default=None,
                       help="radial nodes (the disk uses twice as many angles)")
    solve.add_argument("--tol", type=float, default=None, help="residual tolerance")

    bubble = sub.add_parser("bubble", help="measure a Talenti bubble on a box")
    bubble.add_argument("--n", type=int, default=3)
    bubble.add_argument("--p", type=float, default=2.5)
    bubble.add_argument("--z", type=float, nargs="*", default=None, help="bubble center")
    bubble.add_argument("--lambda", dest="scale", type=float, default=1.0, help="bubble scale")
    bubble.add_argument("--rbox", type=float, default=None,
                        help="box half-width (default 20 * lambda)")
    bubble.add_argument("--resolution", type=int, default=None, help="box nodes per axis")

    mp = sub.add_parser("mp-analyze", help="moving-planes report of a dumped field")
    mp.add_argument("field", help="field CSV written by solve or bubble")
    mp.add_argument("--p", type=float, required=True)
    mp.add_argument("--deficit", type=float, default=0.0)
    mp.add_argument("--levels", type=int, default=SCAN_LEVELS)
    mp.add_argument("--decay-exponent", type=float, default=None)

    sweep = sub.add_parser("sweep", help="epsilon sweep with a log-law fit")
    sweep.add_argument("--family", choices=("ball", "space"), default="ball")
    sweep.add_argument("--n", type=int, default=None)
    sweep.add_argument("--p", type=float, default=None)
    sweep.add_argument("--epsilons", type=float, nargs="*", default=None)

    verify = sub.add_parser("verify", help="run the verification suite")
    verify.add_argument("checks", nargs="*", help=f"subset of: {', '.join(VERIFY_CHECKS)}")

    fit = sub.add_parser("fit", help="fit the log law to a CSV of (deficit, deviation)")
    fit.add_argument("csv")

    plot = sub.add_parser("emit-plot", help="write plot data for a sweep record")
    plot.add_argument("record", help="record.json of a sweep run")
    return parser


def _base_config(args) -> dict:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"cannot read config {args.config}: {e}") from e
    else:
        data = {}
    if args.out:
        data["output_dir"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    return data


def _problem(data: dict, n: Optional[int], p: Optional[float], **extra) -> dict:
    problem = dict(data.get("problem", {}))
    if n is not None:
        problem["n"] = n
    if p is not None:
        problem["p"] = p
    problem.update({k: v for k, v in extra.items() if v is not None})
    return problem


def _run_command(args, formatter: ReportFormatter) -> None:
    data = _base_config(args)
    command = args.command

    if command == "solve":
        data.update(kind="single-solve",
                    problem=_problem(data, args.n, args.p, f=args.f, kappa=args.kappa, tol=args.tol))
        mesh = data.setdefault("mesh", {})
        if args.mode:
            mesh["solver"] = args.mode
        if args.resolution is not None:
            mesh["resolution"] = args.resolution
        record = run(ExperimentConfig.from_dict(data))
        print(formatter.format_mapping(record.outputs["solve"], "Solve"))
        if "apriori" in record.outputs:
            print(formatter.format_mapping(record.outputs["apriori"], "A-priori constants"))
        if not record.outputs["solve"]["converged"]:
            raise NumericalError(f"solver did not converge (residual {record.outputs['solve']['residual']:.3e})")

    elif command == "bubble":
        data.update(kind="bubble-report", problem=_problem(data, args.n, args.p))
        bubble = data.setdefault("bubble", {})
        if args.z is not None:
            bubble["center"] = args.z
        if args.scale <= 0:
            raise InvalidInputError(f"--lambda must be positive, got {args.scale}")
        bubble["scale"] = args.scale
        mesh = data.setdefault("mesh", {})
        if args.rbox is not None:
            if args.rbox <= 0:
                raise InvalidInputError(f"--rbox must be positive, got {args.rbox}")
            mesh["box_half_width"] = args.rbox / args.scale
        if args.resolution is not None:
            mesh["box_nodes"] = args.resolution
        record = run(ExperimentConfig.from_dict(data))
        print(formatter.format_mapping(record.outputs["sobolev"], "Sobolev quotient"))
        print(formatter.format_mapping(record.outputs["decay"], "Decay constants"))

    elif command == "mp-analyze":
        report = analyze_field(args.field, args.p, args.deficit, args.out,
                               seed=args.seed if args.seed is not None else LAB_SEED,
                               levels=args.levels, decay_exponent=args.decay_exponent)
        print(formatter.format_table(report["lambdas"], title="Critical positions"))
        print(formatter.format_mapping(report, "Moving planes"))

    elif command == "sweep":
        kind = "ball-sweep" if args.family == "ball" else "space-sweep"
        data.setdefault("problem", {"n": 2, "p": 3.0} if args.family == "ball" else {"n": 3, "p": 2.5})
        data.update(kind=kind, problem=_problem(data, args.n, args.p))
        if args.epsilons:
            data["epsilons"] = args.epsilons
        record = run(ExperimentConfig.from_dict(data))
        rows = [{"epsilon": s["epsilon"], "deficit": s["deficit"], "deviation": s["deviation"]}
                for s in record.samples]
        print(formatter.format_table(rows, title=f"Sweep ({len(record.dropped)} dropped)"))
        if record.fit is not None:
            print(formatter.format_mapping(record.fit, "Log-law fit"))
        elif data.get("fit", True):
            raise NumericalError("too few usable samples for the log-law fit")

    elif command == "verify":
        data.update(kind="verify-suite", checks=args.checks or data.get("checks", []))
        data.setdefault("problem", {"n": 2, "p": 3.0})
        record = run(ExperimentConfig.from_dict(data))
        print(formatter.format_verdicts(record.outputs["verdicts"]))
        if not record.outputs["passed"]:
            raise NumericalError("verification suite has failing checks")

    elif command == "fit":
        fit = fit_from_csv(args.csv)
        print(formatter.format_mapping(fit.to_dict(), "Log-law fit"))
        if fit.degenerate:
            raise NumericalError(f"degenerate log-law fit (alpha = {fit.alpha:.3g})")

    elif command == "emit-plot":
        paths = emit_plot_data(ResultRecord.load(args.record), args.out)
        print("\n".join(str(p) for p in paths))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    formatter = ReportFormatter()
    try:
        _run_command(args, formatter)
    except InvalidInputError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INPUT
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
