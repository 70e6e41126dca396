"""Semiparametric estimation of response transformations in additive models."""

from .backfit import AdditiveFit, Bandwidths, predict, smooth_backfit
from .config import RunConfig, parse_config
from .cv import cv_select_bandwidths
from .data_io import emit_report, load_csv
from .dataset import Dataset
from .density import kde, residuals, silverman_g
from .estimators import (
    BandwidthPolicy,
    EstimationResult,
    Method,
    ThetaGrid,
    fit,
    grid_search,
    md_objective,
    pl_objective,
)
from .inference import BootstrapResult, bootstrap_md, bootstrap_pl_naive, resample
from .kernels import GAUSSIAN, QUARTIC, KernelSpec, nw_1d
from .simulation import DgpSpec, McReport, baseline_q3, baseline_q4, generate, run_mc
from .transforms import TransformFamily, dtheta, dy, forward, inverse

__version__ = "0.1.0"
