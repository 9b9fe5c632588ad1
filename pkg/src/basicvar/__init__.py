"""Symmetry-reduced variational problems on cohomogeneity-one foliated models.

The package discretizes leaf-constant functions on the one-dimensional
quotient of a foliated manifold, minimizes stretched nonlocal energies under
a mass constraint, recovers the Lagrange multiplier and the effective
eigenvalue, and verifies on the full product grid that the reduced critical
points kill the complete first variation.
"""

__version__ = "0.1.0"

from .averaging import (FullGrid, FullGridFunction, average, integrate_full,
                        is_basic, lift, shift, symmetric_functional,
                        verify_average_identity)
from .criticality import (CriticalityReport, flow_invariance_check,
                          full_denergy, gradient_is_basic_check,
                          verify_symmetric_criticality)
from .functionals import (DirectionalDerivative, GeneralEnergySpec,
                          KirchhoffSpec, denergy_general, denergy_kirchhoff,
                          energy_general, energy_kirchhoff,
                          extract_symmetric_coefficients, power_mass,
                          power_mass_variation, potential_mass)
from .grids import (BasicFunction, ExponentReport, QuotientGrid,
                    critical_exponent, derivative, embedding_range, integrate,
                    lp_norm, sobolev_energy)
from .models import (FullModel, QuotientModel, leaf_volume_asymptotics,
                     make_flat_torus_model, make_sphere_clifford_model,
                     make_sphere_latitude_model, mean_curvature, total_volume)
from .solver import (SolveConfig, SolveResult, constraint_target,
                     extract_theta, lambda_star_general,
                     lambda_star_kirchhoff, minimize_on_constraint,
                     project_to_constraint, solve_sequence)
