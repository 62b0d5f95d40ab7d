"""Day-ahead local flexibility market simulator for energy communities and a DSO."""

__version__ = "0.1.0"
