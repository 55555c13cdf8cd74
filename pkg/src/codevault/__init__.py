"""Calibration-free digit-code entry: the machine learns what the user's
signals mean while inferring which digit the user has in mind."""

from .signals import (ButtonPress, DisplayPattern, MeaningLabel, PointSignal,
                      SessionMode, Signal, complement_pattern, pattern_label,
                      validate_signal)
from .classifier import (CategoricalModel, ClassifierConfig, GaussianModel,
                         LabeledDataset, fit, loo_log_score, predict_prob)
from .engine import (EngineParams, EngineState, decide, decision_posterior,
                     ingest, learned_classifier, new_engine, weights)
from .planner import (PlannerState, identifiability, new_planner,
                      next_pattern, record_pattern)
from .session import (CodeSession, Level, SessionConfig, SessionStatus,
                      elimination_update, replay, replay_file, start,
                      state_hash, transfer_update)
from .simulator import (BatchCell, ButtonUser, GaussianUser, RandomClicker,
                        TrialResult, gen_signal, run_batch, run_trial)

__version__ = "0.1.0"
