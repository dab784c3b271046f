"""Monte Carlo simulation and analysis of multiplexed SFWM entangled-pair sources."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("sfwmsim")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"
