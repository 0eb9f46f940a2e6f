"""procflow: collaborative process modeling, guidance, enactment, simulation."""

__version__ = "0.1.0"
