"""Global bandits: greedy policies for arms that share a parameter, plus their analysis.

Typical use::

    from global_bandits import GPEnvironment, three_arm_example, run_replication
    env = GPEnvironment(three_arm_example(), theta_star=0.6)
    trace = run_replication(env, "wagp_gp", T=10_000, master_seed=1, rep=0)
"""

from .analysis import (BayesConfig, OptimalityRegions, RegretSummary, StructuralSummary, avg_regret_bound,
                       bayes_risk_bound, empirical_regret, informativeness_check, lemma1_lower_bound,
                       lower_bound_instance, lower_bound_value, one_step_bound, optimality_regions,
                       regime_constants, structural_summary, suboptimality_distance, suboptimality_gap,
                       three_regime_bound, worst_case_bound)
from .environment import (ComonotoneSampler, DriftEnvironment, DriftSpec, GIEnvironment, GPEnvironment, Noise,
                          ParameterPrior, gen_drift_path, oracle_arm, replication_streams, sample_parameter_prior,
                          sample_reward, validate_drift)
from .errors import (AggregationError, ConfigError, DomainError, GlobalBanditError, InvalidFunctionError,
                     InvalidPairError, InvalidSpecError, OutOfScopeError, RangeError, SequencingError)
from .kernels import BACKEND
from .policies import (OraclePolicy, RunTrace, UCB1Policy, WagpGiPolicy, WagpGpPolicy, WindowedWagpPolicy,
                       tune_tau_h, wagp_gi_select, wagp_gi_update, wagp_gp_select, wagp_gp_update,
                       window_schedule)
from .reward_model import (AggregateHolder, EstimatorFunction, HolderMeta, RewardFunction, aggregate_holder,
                           derived_estimator, derived_estimator_matrix, holder_constants, three_arm_example,
                           two_linear_arms)
from .simulation import PolicySpec, replicate, run_replication

__version__ = "0.1.0"
