"""Sequential PDEVS kernel and DEVStone benchmark harness."""

__version__ = "0.1.0"
