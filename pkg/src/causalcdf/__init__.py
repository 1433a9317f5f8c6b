"""Treatment-effect estimation via inverse-probability-weighted counterfactual CDFs.

The estimator chain: select informative confounders and pairwise dependence
by L1-penalized least squares, fit a logistic propensity model on the
selected terms, build self-normalized weighted CDFs of each arm, and read any
functional treatment effect (mean, quantile, CDF gap) off the two curves,
with plug-in sandwich or bootstrap standard errors.
"""

from .datamodel import ColumnSpec, Dataset, arm_split, load_csv
from .effects import (EffectReport, EstimandSpec, ate, ate_ipw, ate_ld, dte,
                      effect_cdf, make_report, qte, qte_firpo)
from .errors import (CausalCdfError, DegenerateDensityError, DegenerateDesignError,
                     EmptyDataError, InvariantError, RunError, SchemaError,
                     ValidationError)
from .inference import (BootstrapSummary, DensityEstimate, SandwichParts,
                        bootstrap_se, influence_curve, kde_density, sandwich_se)
from .pipeline import (CdfPipelineFit, PipelineOptions, PointEstimator,
                       estimate_reports, fit_cdf_pipeline, fit_plain_propensity)
from .propensity import (PropensityFit, StarDesign, build_star_design, fit_logistic,
                         full_main_star, predict_propensity)
from .selection import (KERNEL, GraphSelection, InteractionDesign, build_design,
                        default_lambda_grid, fit_lasso, mains_only_design,
                        select_lambda)
from .simulation import (MetricsRow, ScenarioConfig, SimOptions, TruthRecord,
                         aggregate_metrics, compute_sen_spe, covariance_matrix,
                         gen_covariates, gen_outcome, gen_treatment,
                         generate_replicate, metrics_to_csv, metrics_to_markdown,
                         run_replications, scenario_edges, simulate_outcomes,
                         true_effect, true_propensity)
from .weighted_cdf import WeightedCdf, build_ipw_cdf, cdf_eval, cdf_mean, cdf_quantile

__version__ = "0.1.0"

__all__ = [
    "ColumnSpec", "Dataset", "arm_split", "load_csv",
    "EffectReport", "EstimandSpec", "ate", "ate_ipw", "ate_ld", "dte",
    "effect_cdf", "make_report", "qte", "qte_firpo",
    "CausalCdfError", "DegenerateDensityError", "DegenerateDesignError",
    "EmptyDataError", "InvariantError", "RunError", "SchemaError",
    "ValidationError",
    "BootstrapSummary", "DensityEstimate", "SandwichParts", "bootstrap_se",
    "influence_curve", "kde_density", "sandwich_se",
    "CdfPipelineFit", "PipelineOptions", "PointEstimator", "estimate_reports",
    "fit_cdf_pipeline", "fit_plain_propensity",
    "PropensityFit", "StarDesign", "build_star_design", "fit_logistic",
    "full_main_star", "predict_propensity",
    "KERNEL", "GraphSelection", "InteractionDesign", "build_design",
    "default_lambda_grid", "fit_lasso", "mains_only_design", "select_lambda",
    "MetricsRow", "ScenarioConfig", "SimOptions", "TruthRecord",
    "aggregate_metrics", "compute_sen_spe", "covariance_matrix",
    "gen_covariates", "gen_outcome", "gen_treatment", "generate_replicate",
    "metrics_to_csv", "metrics_to_markdown", "run_replications",
    "scenario_edges", "simulate_outcomes", "true_effect", "true_propensity",
    "WeightedCdf", "build_ipw_cdf", "cdf_eval", "cdf_mean", "cdf_quantile",
    "__version__",
]
