"""Treatment-effect estimation versus treatment-rule quality, by simulation."""

from .base_learners import FittedCurve, LoessConfig, Method, evaluate, fit_loess, fit_ols
from .harness import ExperimentConfig, MetricsRecord, emit_plot_data, load_config, run_experiment
from .lemma_diagnostics import MembershipReport, PointwiseCase, classify_point, membership_report, s1_check
from .meta_learners import (CateEstimate, CateMethod, XLearnerConfig, evaluate_cate, fit_standard,
                            fit_xlearner, oracle_estimate)
from .policy_eval import (EvalGrid, TreatmentRule, constant_rule, emse, ipw_value, misclassification,
                          optimal_rule, regret_report, sign_rule)
from .scenario_gen import (ScenarioSpec, TrialDataset, analytic_value, builtin_scenario, generate,
                           read_csv, true_cate, true_mu, write_csv)

ingest_csv = read_csv

__version__ = "0.1.0"
