"""Trained (frozen) and universal lossless coding for binary sources.

The package measures how much training a frozen coder needs before it beats
a universal coder, for memoryless binary sources and two-state chains:
closed-form and numerically evaluated redundancy bounds, seeded samplers,
count-based estimators (including the budget-inhibited chain procedure),
exact and Monte Carlo experiment harnesses, and a bit-exact arithmetic
coder behind a small CLI.
"""

from .bounds import (ALPHA0, TailBoundResult, b_upper, iid_achievable_a,
                     iid_converse_a, markov_achievable_a, markov_avg_bounds,
                     markov_converse_a, training_threshold,
                     universal_redundancy)
from .coders import (CodeStream, FrozenModel, arith_decode, arith_encode,
                     frozen_codelength, kt_codelength_iid,
                     kt_codelength_markov, redundancy_markov)
from .estimators import (CountStatistic, EstimatorSpec, GenieResult,
                         alpha_range, estimate, genie_budgets, genie_inhibit,
                         markov_counts, p_e2_hoeffding)
from .experiments import (BeatReport, SweepConfig, TailEstimate,
                          beat_universal_experiment, default_p_grid,
                          exact_avg_redundancy_iid, exact_tail_iid,
                          mc_avg_redundancy_iid, mc_markov, mc_tail_iid)
from .models import (BernoulliModel, MarkovModel, TrainingSet, entropy_rate,
                     sample_iid, sample_markov, stationary)
from .specfn import (binary_entropy, binary_kl, chi2_2_quantile, lambert_w,
                     poisson_cdf, poisson_div, q_function, q_inv)

__version__ = "0.1.0"
