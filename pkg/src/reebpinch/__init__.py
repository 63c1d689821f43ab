"""reebpinch: radial Hamiltonian profiles, connecting trajectories, and
Reeb dynamics on starshaped hypersurfaces."""

__version__ = "0.1.0"
