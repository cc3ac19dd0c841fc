"""Configuration management for the moving-planes lab."""
import os
from dotenv import load_dotenv

load_dotenv()

# Runs and logging
LAB_OUTPUT_DIR = os.getenv("LAB_OUTPUT_DIR", "runs")
LAB_SEED = int(os.getenv("LAB_SEED", "20240101"))
LAB_LOG_LEVEL = os.getenv("LAB_LOG_LEVEL", "INFO")

# Solver
SOLVER_TOL = float(os.getenv("SOLVER_TOL", "1e-8"))
SOLVER_MAX_ITER = int(os.getenv("SOLVER_MAX_ITER", "600"))
EPS_REG_START = float(os.getenv("EPS_REG_START", "1e-2"))
EPS_REG_FLOOR = float(os.getenv("EPS_REG_FLOOR", "1e-6"))
EPS_REG_FACTOR = float(os.getenv("EPS_REG_FACTOR", "10"))
DAMPING_START = float(os.getenv("DAMPING_START", "0.5"))
DAMPING_MIN = float(os.getenv("DAMPING_MIN", "0.015625"))

# Meshes
RADIAL_NODES = int(os.getenv("RADIAL_NODES", "1000"))
DISK_RADIAL_NODES = int(os.getenv("DISK_RADIAL_NODES", "33"))
DISK_ANGULAR_NODES = int(os.getenv("DISK_ANGULAR_NODES", "64"))
BOX_NODES = int(os.getenv("BOX_NODES", "33"))
R_BOX_FACTOR = float(os.getenv("R_BOX_FACTOR", "20"))
BOX_GRADING = float(os.getenv("BOX_GRADING", "4"))

# Moving planes
SCAN_LEVELS = int(os.getenv("SCAN_LEVELS", "200"))
BISECTION_TOL = float(os.getenv("BISECTION_TOL", "1e-4"))
THRESHOLD_LIP_FACTOR = float(os.getenv("THRESHOLD_LIP_FACTOR", "3"))
THRESHOLD_C3 = float(os.getenv("THRESHOLD_C3", "1"))
ANGULAR_SAMPLES_2D = int(os.getenv("ANGULAR_SAMPLES_2D", "256"))
ANGULAR_SAMPLES_ND = int(os.getenv("ANGULAR_SAMPLES_ND", "1024"))

# Inequalities
GRADIENT_FLOOR = float(os.getenv("GRADIENT_FLOOR", "1e-12"))
EXCLUDED_MEASURE_LIMIT = float(os.getenv("EXCLUDED_MEASURE_LIMIT", "0.01"))
HARNACK_C_FLAT = float(os.getenv("HARNACK_C_FLAT", "0.5"))
HARNACK_C_NATURAL = float(os.getenv("HARNACK_C_NATURAL", "2"))

# Harness
SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS", "4"))
MAX_TABLE_ROWS = int(os.getenv("MAX_TABLE_ROWS", "50"))
WRITE_FIELDS = os.getenv("WRITE_FIELDS", "true").lower() == "true"
