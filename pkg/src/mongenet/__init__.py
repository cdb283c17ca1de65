"""Neural-network solvers for the Dirichlet problem of the Monge-Ampère equation."""

__version__ = "0.1.0"
