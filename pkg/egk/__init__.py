import pluggy

__version__ = "2026.10.17"

statistic = pluggy.HookimplMarker("egk.statistic")
"""Marker to be imported and used in statistic plugins"""

from .params import ChannelParams, OmegaSplit, Shadowing, egk_params
from .stoppable_worker import StoppableWorker
