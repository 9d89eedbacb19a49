"""aoisim: a discrete-time simulator for status sampling over a shared
uplink, with Nyquist-driven sampling intervals, freshness/energy accounting,
a closed-form device-selection rule, and a from-scratch cooperative
reinforcement-learning stack for the sampling policies."""

from .dynamics import (DivergenceError, EigendecompositionError,
                       FrequencyAnalysis, Nonlinearity, PhysicalProcess,
                       eigenvalues, estimate_state, estimation_error,
                       jacobian, max_variation_frequency, step_process)
from .harness import (ExperimentConfig, FitResult, RunResult, SweepResult,
                      fit_trace, load_config, pareto_sweep, run_experiment,
                      run_sweep, save_config)
from .marl import (DqnTrainer, LossTrace, MixingNetwork, QmixTrainer,
                   TrainerConfig, UniformPolicy, act, device_reward,
                   encode_features, make_agent, mix, run_episode, td_target)
from .metrics import (CostLedger, DeviceState, reconstruction_error,
                      slot_energy, update_bs_aoi, update_device_aoi,
                      weighted_cost)
from .neural import DenseNet, Experience, ReplayBuffer
from .radio import (RadioModel, calibrated_reference_gain, dbm_to_watts,
                    delay, draw_fading, expected_delay, rate)
from .selector import (SelectionProblem, brute_force_select, coefficients,
                       objective, select)
from .system import IoTSystem, SlotResult
from .tabular import TabularMDP, bellman_apply, contraction_ratio, random_mdp, value_iteration

__version__ = "0.1.0"
