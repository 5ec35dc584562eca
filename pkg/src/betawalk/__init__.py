"""Random walk in a Beta random environment: duality, stationary fields and fluctuations."""

__version__ = "0.1.0"
