import os
import warnings

from dotenv import load_dotenv

# Load test environment variables
load_dotenv(".env.test", override=True)


def pytest_configure(config):
    """Configure pytest."""
    config.addinivalue_line("addopts", "--cov=app --cov-report=term-missing --cov-report=html")

    # Set test environment variables
    os.environ["LOG_PATH"] = "./test_logs"
    os.environ.setdefault("FAIRSCORE_ORACLE_WORKERS", "1")

    # numpy warns on the inf entries oracle grids use for infeasible points
    warnings.filterwarnings("ignore", category=RuntimeWarning, message=".*invalid value.*")
