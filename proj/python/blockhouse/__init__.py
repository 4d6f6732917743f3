"""BlockHouse storage protocol simulator."""

from ._core import ProtocolError, analysis, por, sim

__all__ = ["ProtocolError", "analysis", "por", "sim"]
