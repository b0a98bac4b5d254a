import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Numerical tolerances
TAU_NORM = float(os.getenv("FAIRSCORE_TAU_NORM", "1e-9"))
TAU_EQ = float(os.getenv("FAIRSCORE_TAU_EQ", "1e-9"))
TAU_LP = float(os.getenv("FAIRSCORE_TAU_LP", "1e-7"))
TAU_FEAS = float(os.getenv("FAIRSCORE_TAU_FEAS", "1e-9"))

# Simplex pivoting policy
PIVOT_TOL = float(os.getenv("FAIRSCORE_PIVOT_TOL", "1e-10"))
BLAND_STALL_FACTOR = int(os.getenv("FAIRSCORE_BLAND_STALL_FACTOR", "3"))
MAX_ITERATIONS = int(os.getenv("FAIRSCORE_MAX_ITERATIONS", "200000"))

# Brute-force oracle
GRID_CAP = int(os.getenv("FAIRSCORE_GRID_CAP", str(10**7)))
GRID_STEPS = int(os.getenv("FAIRSCORE_GRID_STEPS", "201"))
ORACLE_WORKERS = int(os.getenv("FAIRSCORE_ORACLE_WORKERS", "1"))

# Instances above these sizes are never cross-checked by --verify
VERIFY_MAX_GROUPS = int(os.getenv("FAIRSCORE_VERIFY_MAX_GROUPS", "3"))
VERIFY_MAX_CELLS = int(os.getenv("FAIRSCORE_VERIFY_MAX_CELLS", "5"))

# Logging
LOG_PATH = os.getenv("LOG_PATH", "logs")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
