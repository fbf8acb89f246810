"""Classical restoration solvers: deconvolution, inpainting, colour and exposure."""

from .color import (ColorStats, DegenerateFrameWarning, SingularCovarianceWarning, color_retransfer,
                    color_stats, estimate_gamma, exposure_correct)
from .patch import patch_inpaint
from .pyramid import HfPyramid, hf_edge_fidelity, hf_pyramid
from .tv import SolverInfo, TvParams, tv_deconvolve, tv_inpaint

__all__ = [
    "ColorStats", "DegenerateFrameWarning", "HfPyramid", "SingularCovarianceWarning", "SolverInfo",
    "TvParams", "color_retransfer", "color_stats", "estimate_gamma", "exposure_correct",
    "hf_edge_fidelity", "hf_pyramid", "patch_inpaint", "tv_deconvolve", "tv_inpaint",
]
