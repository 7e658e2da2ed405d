"""Trigraded Ext computations over motivic A(0)/A(1) dual Hopf algebroids.

Ground rings are M2 = F2[tau] (base 'C') and F2[tau, rho] (base 'R'), with
deg(tau) = (0,0,-1) and deg(rho) = (-1,0,-1) in (stem, filtration, weight).
The package builds the dual algebroids, Brown-Gitler style comodules, computes
Ext via a minimal free resolution over the dual algebra (cross-checked against
a literal reduced cobar complex), runs the algebraic Atiyah-Hirzebruch and
rho-Bockstein spectral sequences, and compares against closed-form charts.
"""

from .ground import Base, TriDegree, GroundElement, ground_basis_in_degree
from .hopf import make_algebroid

__all__ = [
    "Base",
    "TriDegree",
    "GroundElement",
    "ground_basis_in_degree",
    "make_algebroid",
]
