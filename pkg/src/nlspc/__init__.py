"""Ground states and nodal solutions of the NLS equation with partial
harmonic confinement, computed by Nehari-projected Sobolev-gradient descent
on a truncated Dirichlet grid."""

from .analysis import (DipoleResult, NodalReport, RadialReport,
                       center_of_mass, count_nodal_domains, decay_metric,
                       dipole_construct, dipole_study,
                       radial_symmetry_residual)
from .grid import (Field, GridError, GridSpec, build_grid, dirichlet_energy,
                   integrate, laplacian_apply)
from .model import (HypothesisReport, NonlinearityModel, PotentialModel,
                    F_eval, check_hypotheses, f_eval, fprime_eval,
                    potential_values, pure_power)
from .solver import (ArmijoRule, FixedRule, GaussianBump, RandomInit,
                     FileInit, SolveReport, SolverConfig,
                     linear_ground_eigenpair, multi_start,
                     solve_constrained_ground_state)
from .symmetry import (PlaneRotation, SignedPermutation, SymmetryConstraint,
                       apply_group_element, apply_group_element_interp,
                       fold_sector, sector_energy, symmetrize,
                       symmetry_residual, unfold_sector)
from .variational import (EnergyBreakdown, energy, fibering_max,
                          first_variation, h_inner_product, nehari_residual,
                          nehari_scale, sobolev_gradient)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
