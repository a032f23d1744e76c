import os
from dotenv import load_dotenv
from pathlib import Path

# Load environment variables from .env file, searching upwards from the current file.
# This makes it work whether running from backend/ or project root.
dotenv_path = Path(__file__).resolve().parent.parent / '.env' # Assumes .env is in backend/
load_dotenv(dotenv_path=dotenv_path)

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent

# --- Experiment Configuration --- #
# Path of the YAML experiment config used when --config is not given.
DEFAULT_CONFIG_PATH_STR = os.getenv("SANGAM_CONFIG", "configs/default.yaml")

# Output directory override. Beats the config file, loses to the --out flag.
OUTPUT_DIR_OVERRIDE = os.getenv("SANGAM_OUTPUT_DIR") or None

# --- Logging --- #
LOG_LEVEL = os.getenv("SANGAM_LOG_LEVEL", "INFO").upper()

# --- Numerical Checks --- #
# NaN/inf assertions after every primitive. Costs a pass over each output array.
DEBUG_CHECKS = os.getenv("SANGAM_DEBUG_CHECKS", 'True').lower() in ('true', '1', 't', 'y', 'yes')

# Checkpoint / artifact format version written into every checkpoint file
CHECKPOINT_FORMAT_VERSION = 1


def get_default_config_path() -> Path:
    """Returns the default experiment config path, resolved against the project root when relative."""
    path = Path(DEFAULT_CONFIG_PATH_STR)
    if not path.is_absolute():
        path = PROJECT_ROOT / path
    return path
