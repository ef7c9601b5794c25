"""Shared active subspaces for vector-valued functions.

Compute, from gradient evaluations, a single orthonormal basis serving all
component functions of a vector-valued map, by gradient-level (ag, mch, lp),
SPD-level (sspd, fg, see), and generalized-eigenvector (zahm) constructions,
and evaluate each basis by reconstruction root-mean-square error.
"""
from ._version import __version__
from .errors import (ConfigError, DegenerateSpectrumWarning, DomainError,
                     EmptyEvaluationError, NearConstantOutputWarning,
                     NonConvergenceError, SampleCountWarning, SharedSubError,
                     SingularCovarianceError, SingularMatrixError, StencilError,
                     ValidationError, ZeroColumnWarning)
from .evaluation import (ReconstructionResult, RmseRecord, SummaryPlotTable,
                         reconstruct_condexp, reconstruct_linear_map,
                         reconstruct_projection, rmse_sum, summary_plot_data,
                         write_rmse_csv, write_summary_csv)
from .experiment import (ExperimentConfig, ExperimentResult,
                         compare_normalization, mean_sum_rmse, run_experiment,
                         run_summary_plot)
from .gradients import (JacobianSet, OutputStats, SpdCollection, assemble_h,
                        assemble_spd, build_jacobian_set, composed_map,
                        jacobian_fd, jacobian_set_from_dataset, lee_augment,
                        output_stats)
from .linalg import (EigenPair, GeneralizedEigenPair, gen_sym_eig,
                     projector_distance, sym_eig)
from .methods import (METHOD_TAGS, HullPoint, RidgeProjector, SharedBasis,
                      fg_deviation, load_shared_basis, method_ag, method_fg,
                      method_lp, method_mch, method_see, method_sspd,
                      method_zahm, min_norm_hull_point, save_shared_basis)
from .problems import (DatasetProblem, VectorProblem, eval_synthetic_core,
                       load_dataset_problem, save_dataset_problem,
                       synthetic_problem)
from .sampling import (BoxDomain, Distribution, SampleSet, derive_seed,
                       draw_samples, make_rng, mix64, sample_matrix, unit_box,
                       warp_derivative, warp_to_box)

__all__ = [name for name in dir() if not name.startswith("_")]
