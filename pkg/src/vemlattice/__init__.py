"""Virtual element and Voronoi-cell lattice solvers for 2D multiphase elasticity."""

__version__ = "0.1.0"
