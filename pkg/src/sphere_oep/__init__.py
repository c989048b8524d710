"""Numerical toolkit for semilinear Dirichlet problems on the unit 2-sphere.

Builds the two-parameter family of rotationally symmetric model solutions of
Delta u + f(u) = 0, tabulates and inverts their normalized boundary-gradient
curves, solves the Dirichlet problem on (perturbed) spherical annuli, and
verifies the gradient, curvature and length estimates that compare a general
solution with its associated model solution.
"""

__version__ = "0.1.0"

from .nonlinearity import NonlinearitySpec, affine, from_callables  # noqa: F401
from .profiles import (ModelProfile, DiskProfile, solve_annulus_profile,  # noqa: F401
                       solve_disk_profile, compute_h, boundary_gradient,
                       check_sign_lemmas)
