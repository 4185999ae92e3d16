"""Numerical laboratory for planar one-centre problems with weak singular
potentials regularized by smoothing: potential-class certification, apsidal
angle convergence, the transmission-extended flow and its continuity, and the
variational non-minimality of transmission paths."""

__version__ = "0.1.0"

from .potentials import (ClassReport, PotentialSpec, SmoothedPotential,
                         check_admissible, check_slowly_varying, classify,
                         custom, from_config, homogeneous, logarithmic,
                         weak_singularity_check)
from .radial import (Case, DropFromRest, InwardCrossing, RadialProblem,
                     TurningPoints, case_anchor, collision_time, first_zero,
                     time_of_flight, turning_points)
from .apsidal import (ApsidalAngle, SweepPath, apsidal_angle,
                      calibration_integral, convergence_sweep, default_paths,
                      desingularized_factor, increment_ratio,
                      integrand_envelope, smoothed_ratio_limit)
from .simulator import (PhaseState, Perturbation, Trajectory, conserved_drift,
                        integrate, make_initial_data)
from .flow import (ExitedBall, SectionSpec, TransmissionPath,
                   continuity_experiment, diagonal_cells,
                   extended_poincare_map, phase_field, poincare_section,
                   section_through, transmission_extend)
from .variational import (ActionComparison, DiscretePath, action,
                          delta_action, potential_action, standard_variation,
                          transmission_discrete_path)
from .tables import ConvergenceTable, aitken_limit, limit_verdict, richardson_limit

__all__ = [name for name in dir() if not name.startswith("_")]
