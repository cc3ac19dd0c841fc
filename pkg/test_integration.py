"""Integration test for the solve -> dump -> moving planes -> report pipeline."""
import logging
import tempfile
from pathlib import Path

import numpy as np
import pytest

from services.domain import ScalarField, disk_mesh, dump_field
from services.harness import ExperimentConfig, analyze_field, run
from services.report import ReportFormatter
from services.solver import torsion_profile

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_dumped_field_pipeline(tmp_path):
    """A dumped radial field is read back and analyzed next to its CSV."""
    print("\n" + "="*70)
    print("DUMPED FIELD PIPELINE")
    print("="*70)

    mesh = disk_mesh(33, 64)
    r = np.linalg.norm(mesh.points, axis=1)
    path = dump_field(ScalarField(mesh, torsion_profile(2, 3.0, r)), tmp_path / "torsion.csv")

    report = analyze_field(path, 3.0, levels=100)
    print(ReportFormatter().format_table(report["lambdas"], title="Critical positions"))

    assert (tmp_path / "torsion-moving-planes.json").exists()
    assert len(report["lambdas"]) == 4
    assert np.allclose(report["center"], 0.0, atol=0.1)
    print("[OK] Center recovered at the origin")


@pytest.mark.slow
def test_solve_pipeline(tmp_path):
    """Solve on the disk, then analyze the written solution."""
    print("\n" + "="*70)
    print("SOLVE PIPELINE")
    print("="*70)

    config = ExperimentConfig.from_dict({
        "kind": "single-solve",
        "problem": {"n": 2, "p": 3.0},
        "mesh": {"solver": "disk", "radial_nodes": 17, "angular_nodes": 32},
        "output_dir": str(tmp_path),
    })
    record = run(config)
    print(ReportFormatter().format_mapping(record.outputs["solve"], "Solve"))
    assert record.outputs["solve"]["converged"]

    report = analyze_field(config.run_dir / "solution.csv", 3.0, levels=60)
    assert np.allclose(report["center"], 0.0, atol=0.15)
    print("[OK] Solve pipeline completed successfully")


if __name__ == "__main__":
    for test in (test_dumped_field_pipeline, test_solve_pipeline):
        try:
            test(Path(tempfile.mkdtemp()))
        except Exception as e:
            print(f"\n[FAIL] {test.__name__} failed with error: {e}")
            logger.error(f"Error in {test.__name__}", exc_info=e)

    print(f"\n{'='*70}")
    print("INTEGRATION TEST COMPLETE")
    print(f"{'='*70}\n")
