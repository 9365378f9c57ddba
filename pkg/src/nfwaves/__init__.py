"""Traveling fronts and pulses of lateral-inhibition neural field equations.

Closed-form solvers for the threshold-sum (N unit-step) approximation of
smoothed-Heaviside firing rates, continuation in the smoothing width,
Evans-function spectral stability, and an independent time-domain simulator.
"""

from .errors import (BadGuessError, ComplexBranchError, LostMonotonicityError,
                     MaxIterationsError, NFWavesError, NonFiniteError,
                     OrderingViolatedError, PoorFitError, SymmetryViolatedError)
from .firing_rate import (Discretization, FixedPoints, RateSpec,
                          compute_normalizer, discretize, eval_rate,
                          eval_rate_deriv, find_fixed_points,
                          heaviside_discretization, lambda_speed_sign,
                          tau_zero, wave_formula_identity)
from .front_solver import (ContinuationTrace, FrontSolution, H1Report,
                           check_H1, continue_in_tau, eval_front,
                           eval_front_deriv, front_at_tau, heaviside_front,
                           heaviside_front_solution, solve_front)
from .kernel import (KernelParams, SigmaConstants, antiderivative, compute_M,
                     compute_sigmas, eval_kernel, exp_weighted,
                     exp_weighted_integral, make_kernel, section5_kernel,
                     solve_heaviside_speed, speed_index, speed_index_deriv)
from .pulse_solver import (PulseParams, PulseSolution, SingularOrbit,
                           build_singular_orbit, check_locally_excited,
                           eval_pulse, eval_pulse_derivs,
                           fast_system_eigenvalues, omega, solve_pulse,
                           weight_C, weight_D)
from .evans import (EvansContext, EvansScan, essential_spectrum, evans_value,
                    evans_values, matrix_entry, scan, verify_zero_at_origin,
                    winding_number)
from .direct_sim import (SimConfig, SimState, SpeedEstimate, measure_speed,
                         measured_wave_speed, run, stability_probe, step)

__version__ = "0.1.0"
