"""
CHC Portfolio Solver Configuration
----------------------------------
This module contains configuration settings and constants for the
CHC Portfolio Solver.
"""

import os
import tempfile
from pathlib import Path

# Project Structure
# -----------------
# Root directory of the project
ROOT_DIR = Path(__file__).parents[1]

# Data directory
DATA_DIR = ROOT_DIR / 'data'

# Shipped portfolio files
DEFAULT_PORTFOLIO_FILE = DATA_DIR / 'default.portfolio'
ORACLE_PORTFOLIO_FILE = DATA_DIR / 'oracle.portfolio'

# Scratch root: one sub-directory per task run is created below it
SCRATCH_DIR = Path(
    os.environ.get('CHC_SCRATCH_DIR', Path(tempfile.gettempdir()) / 'chc-portfolio')
)

# Oracle Settings
# ---------------
# Default finite evaluation domain
DEFAULT_INT_LO = -64
DEFAULT_INT_HI = 64
DEFAULT_BV_CAP = 8
MAX_BV_CAP = 16

# Saturation limits (facts derived / constraint evaluations)
DEFAULT_MAX_FACTS = 10 ** 6
DEFAULT_MAX_STEPS = 10 ** 7

# Code Generation Settings
# ------------------------
ERROR_FUNCTION = 'reach_error'
DEFAULT_INT_C_TYPE = 'int'

# C integer types usable for LIA Int, with their width in bits
SUPPORTED_INT_C_TYPES = {
    'int': 32,
    'long': 64,
    'long long': 64,
}

MAX_BV_WIDTH = 64

# Exit status of the scripted-input stub when the error function is called
REPLAY_ERROR_STATUS = 17

# Portfolio Settings
# ------------------
# Sibling actors get this long to die after a definitive verdict (seconds)
DEFAULT_GRACE_S = 0.5

# Share of the total wall budget given to each stage of the default plan
DEFAULT_STAGE_FRACTION = 0.5

# How often running actors are polled for completion or cancellation
POLL_INTERVAL_S = 0.01

DEFAULT_TIMEOUT_S = 60.0

# Exit Status
# -----------
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL_ERROR = 3

# Development Settings
# -------------------
# Debug mode
DEBUG = os.environ.get('DEBUG', 'False').lower() == 'true'

# Logging level
LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# Version
VERSION = '0.1.0'
