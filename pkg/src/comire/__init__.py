"""Bayesian convex mixture regression for dose-response risk assessment."""

__version__ = "0.1.0"

from .basis import SplineBasis, build_basis, eval_basis, eval_beta  # noqa: E402
from .gibbs import ChainSettings, PosteriorDraws, run_chain, run_chains  # noqa: E402
from .model import Dataset, ModelConfig, ParamState  # noqa: E402
from .risk import additional_risk, bmd, posterior_bmd, posterior_risk_curve, tv_ratio  # noqa: E402

__all__ = [
    "SplineBasis", "build_basis", "eval_basis", "eval_beta",
    "ChainSettings", "PosteriorDraws", "run_chain", "run_chains",
    "Dataset", "ModelConfig", "ParamState",
    "additional_risk", "bmd", "posterior_bmd", "posterior_risk_curve", "tv_ratio",
]
