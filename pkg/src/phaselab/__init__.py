"""Numerical laboratory for volume-constrained phase transitions on surfaces."""

from .mesh import (SurfaceMesh, assemble_operators, ball_perimeter,
                   ball_radius_for_volume, ball_volume, ellipsoid,
                   generate_mesh, icosphere, load_mesh, torus, EUCLIDEAN_C2)
from .potential import (DoubleWell, TruncatedPotential, polynomial_well,
                        quartic_standard, sigma, truncate,
                        validate_assumptions)
from .profile import ProfileTable, build_profile, profile_residual
from .photography import (ModicaField, photograph, photography_modulus,
                          signed_distance, sublevel_check)
from .energy import (CriticalPoint, FlowConfig, energy, gradient,
                     morse_index, multiplier_audit, ps_residual,
                     solve_constrained)
from .barycenter import (ProjectionResult, barycenter, concentration,
                         homotopy_audit, project_to_mesh, region_diameter,
                         threshold_set)
from .multiplicity import (SweepResult, TopologyCard, dedupe,
                           farthest_point_seeds, morse_report, sweep,
                           topology_card)

__version__ = "0.1.0"
