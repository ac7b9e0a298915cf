"""Sparse IDMA simulation laboratory for unsourced random access.

Subpackages:
  protograph         protographs, PEG lifting, LDPC encoding
  txchain            per-user encoder and multi-user channel
  sensing            partial-DFT preamble codebook and OMP detection
  joint_decoder      joint Tanner graph and flooding BP
  density_evolution  Gaussian-approximation DE and thresholds
  optimizer          differential-evolution ensemble search
  sim                Monte Carlo harness, PUPE and Eb/N0 sweeps
  presets            per-rate code presets and repetition profiles
"""

from .protograph import (LiftedCode, Protograph, lift_cached, lift_peg,
                         lift_peg_full_rank, validate_protograph)
from .txchain import (FrameLayout, Message, RepetitionDD, apply_channel,
                      ebn0_db, encode_user, make_interleaver,
                      powers_for_ebn0, rep_factor)
from .sensing import CsDetection, SensingMatrix, build_sensing_matrix, \
    cs_detect, cs_encode
from .joint_decoder import (JointGraph, build_joint_graph, check_node_update,
                            decode_joint, mac_node_update, pairwise_h,
                            variable_node_update)
from .density_evolution import (MacDegreeProfile, de_evolve, de_threshold,
                                j_fun, j_inv, mac_degree_profile, phi_fun,
                                single_user_threshold)
from .optimizer import Candidate, EnsembleOptimizer, de_generation, \
    optimize_ensemble
from .sim import (PupeEstimate, SimConfig, SimContext, SweepResult,
                  TrialOutcome, emit_report, estimate_pupe, find_min_ebn0,
                  run_trial, wilson_interval)

__version__ = "0.1.0"
