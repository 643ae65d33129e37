"""fedsim: deterministic FedAvg / FedProx simulation on the Cleveland heart-disease data."""

__version__ = "1.0.0"
