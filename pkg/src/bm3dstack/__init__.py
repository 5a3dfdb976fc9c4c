"""Multi-frame Poisson denoising with BM3D extensions and the Anscombe transform."""

from .engine import Accumulator, CoverageError, EngineConfig, aggregate, hard_stage, wiener_stage
from .extensions import Method, average_frames, default_config, denoise
from .imgio import load_stack, read_image, write_image
from .matching import Group3D, Patch, SearchConfig, enumerate_references, find_similar, patch_distance
from .prefilter import LowPassSpec, lowpass
from .simeval import ExperimentSpec, NoiseSpec, ResultRow, add_poisson, psnr, run_experiment
from .transforms import forward_2d, hard_threshold, inverse_2d, wht_1d, wiener_shrink
from .vst import VstState, anscombe_forward, exact_unbiased_inverse_cf, rescale_back, rescale_to_unit

__version__ = "0.1.0"

__all__ = [
    "Accumulator", "CoverageError", "EngineConfig", "ExperimentSpec", "Group3D",
    "LowPassSpec", "Method", "NoiseSpec", "Patch", "ResultRow", "SearchConfig",
    "VstState", "add_poisson", "aggregate", "anscombe_forward", "average_frames",
    "default_config", "denoise", "enumerate_references", "exact_unbiased_inverse_cf",
    "find_similar", "forward_2d", "hard_stage", "hard_threshold", "inverse_2d",
    "load_stack", "lowpass", "patch_distance", "psnr", "read_image", "rescale_back",
    "rescale_to_unit", "run_experiment", "wht_1d", "wiener_shrink", "wiener_stage",
    "write_image",
]
