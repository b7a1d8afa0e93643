"""tachorn: Horn-clause safety checking for networks of timed processes."""

__version__ = "0.1.0"
