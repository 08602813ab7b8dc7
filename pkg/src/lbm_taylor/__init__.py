"""Linear multiple-relaxation-time lattice Boltzmann schemes: equivalent equations,
fourth-order parameter tuning, dispersion analysis and eigenmode experiments."""

__version__ = "0.1.0"
