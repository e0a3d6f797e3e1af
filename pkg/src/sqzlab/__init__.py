"""sqzlab - sub-threshold OPO squeezer modeling, simulation and parameter estimation."""

__version__ = "0.1.0"
