"""Amplify-and-forward (analog network coding) rates in layered relay networks."""
from .network import (LayeredNetwork, NetworkError, ScalingVector, ValidationReport,
                      diamond, dump_network, enumerate_paths, fully_connected,
                      linear_chain, load_network, random_network, validate)
from .propagation import (PropagationState, SnrReport, anc_rate, beta_max,
                          check_feasibility, forward_propagate, full_power_beta,
                          modified_gains_by_paths, rate_from_snr, received_power,
                          snr_destination)
from .optimizer import (OptimizationResult, SolverConfig, brute_force_optimize,
                        layer_subproblem_objective, optimize_layer, optimize_network,
                        stationarity_check)

__version__ = "0.1.0"
