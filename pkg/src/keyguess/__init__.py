"""Classical and quantum key guessing over non-uniform key distributions."""

__version__ = "0.1.0"

from .cost import (CostReport, SpeedupReport, arikan_bounds, grover_queries,
                   lpn_small_noise_bound, moment_bruteforce, moment_typed, speedup)
from .distributions import (AtomDistribution, DistributionError, ExplicitDistribution,
                            ProductDistribution, ZipfDistribution, dist_from_json, dist_to_json,
                            hartley_entropy, load_dist, make_bernoulli, make_binomial,
                            make_categorical, make_discrete_gaussian, make_family,
                            make_geometric, make_poisson, make_ternary, make_uniform, make_zipf,
                            min_entropy, renyi_entropy, shannon_entropy)
from .ranking import (BudgetExceeded, RankTable, build_rank_table, core_set_size,
                      cumulative_mass, get_key, load_rank_table, rank_of_key, save_rank_table)
from .simulate import (DoublingLimitExceeded, SimConfig, SimOutcome, aborted_key_guess,
                       core_set_mass_estimate, key_guess, multi_key_guess,
                       quantum_multi_key_guess)
