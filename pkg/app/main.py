import logging
import os
import sys
from typing import Optional

from app.config import LOG_LEVEL, LOG_PATH

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = "fairscore.log"


def configure_logging(level: Optional[str] = None, quiet: bool = False) -> None:
    """
    Log to stderr and to $LOG_PATH/fairscore.log.

    Standard output is left to the reports. ``quiet`` keeps only warnings and
    errors on stderr; the log file always receives ``level``.
    """
    level_name = (level or LOG_LEVEL).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    # Create logs directory if it doesn't exist
    os.makedirs(LOG_PATH, exist_ok=True)

    stream = logging.StreamHandler(sys.stderr)
    stream.setLevel(logging.WARNING if quiet else numeric_level)
    file_handler = logging.FileHandler(os.path.join(LOG_PATH, LOG_FILE))
    file_handler.setLevel(numeric_level)

    logging.basicConfig(
        level=numeric_level,
        format=LOG_FORMAT,
        handlers=[stream, file_handler],
        force=True,
    )
