"""High-order cell-centred finite volume solver for solid mechanics.

Displacement unknowns live at cell centroids. Face fluxes are integrated
with Gaussian quadrature from weighted least-squares Taylor reconstructions
(selectable order p = 1, 2, 3), stabilised by a face-jump traction term, and
the nonlinear system is solved with a Jacobian-free Newton-Krylov method.
"""

__version__ = "0.1.0"
