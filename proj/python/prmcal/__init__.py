"""Calibration and instance-adaptive compute budgeting for process-reward scores."""

from prmcal._core import *  # noqa: F401,F403
from prmcal._core import __version__  # noqa: F401
