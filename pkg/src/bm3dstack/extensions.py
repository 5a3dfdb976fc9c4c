"""The four multi-frame methods, plus plain frame averaging.

Every method wraps the two-step engine with the variance-stabilization
pipeline: Anscombe forward, rescale to [0, 1], filter, rescale back,
closed-form exact unbiased inverse.  Differences between methods are in
where reference patches come from, where the search looks, and what the
first-stage matcher sees:

* ``bm3d1``   averages the frames first and denoises the average.
* ``bm3d2``   denoises every frame independently, then averages.
* ``bm3d3``   takes references from one frame, searches all frames.
* ``bm3d4``   takes references from all frames, searches all frames.
* ``bm3d4_sigma``  is bm3d4 with first-stage matching on low-pass
  filtered raw frames (the filter never touches filtered pixel values).

For ``bm3d1`` the transform is applied to the already-averaged image and
the stabilized sigma is still treated as unit.  Averaging changes the
noise distribution, so stabilization is deliberately imprecise there;
that reproduces the published behavior of the method.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .engine import EngineConfig, hard_stage, wiener_stage
from .imgio import validate_frame
from .prefilter import LowPassSpec, lowpass_stack
from .vst import anscombe_forward, exact_unbiased_inverse_cf, rescale_back, rescale_to_unit

VARIANTS = ("bm3d1", "bm3d2", "bm3d3", "bm3d4", "bm3d4_sigma")


@dataclass(frozen=True)
class Method:
    """A denoising method selection."""

    variant: str
    ref_frame: int | None = None    # bm3d3 only
    sigma_lp: float | None = None   # bm3d4_sigma only
    lp_shape: str = "radial"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "bm3d3" and self.ref_frame is None:
            raise ValueError("bm3d3 needs a reference frame")
        if self.variant == "bm3d4_sigma" and self.sigma_lp is None:
            raise ValueError("bm3d4_sigma needs sigma_lp")


def default_config() -> EngineConfig:
    """Engine defaults; sigma is a placeholder the VST pipeline replaces."""
    return EngineConfig(sigma=1.0)


def average_frames(stack: np.ndarray) -> np.ndarray:
    """Pixel-wise arithmetic mean over the frame axis."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 1:
        raise ValueError("expected a nonempty (L, H, W) stack")
    return stack.mean(axis=0)


def _two_step(noisy: np.ndarray, match1: np.ndarray, cfg: EngineConfig) -> np.ndarray:
    """Run both stages and return the final cross-frame aggregate.

    With references restricted to one frame there is a single first-stage
    estimate; the second stage then runs on that image alone, with data
    gathered from the reference frame (the other frames were already
    fused into the pilot).
    """
    basic = hard_stage(noisy, match1, cfg)
    if cfg.ref_scope == "all":
        return wiener_stage(noisy, basic.per_frame, cfg).combined
    ref = int(cfg.ref_scope)
    cfg2 = replace(cfg, ref_scope=0)
    return wiener_stage(noisy[ref:ref + 1], basic.combined[None], cfg2).combined


def _stabilized(stack: np.ndarray, cfg: EngineConfig,
                match_raw: np.ndarray | None = None) -> np.ndarray:
    """VST pipeline around the engine for Poisson-count input."""
    scaled, state = rescale_to_unit(anscombe_forward(stack))
    cfg = replace(cfg, sigma=state.sigma_rescaled)
    match1 = scaled if match_raw is None else np.ascontiguousarray(match_raw)
    final = _two_step(scaled, match1, cfg)
    return exact_unbiased_inverse_cf(rescale_back(final, state))


def denoise(stack: np.ndarray, method: Method,
            config: EngineConfig | None = None) -> np.ndarray:
    """Denoise a Poisson-count frame stack with the chosen method.

    Returns a single frame in the same intensity scale as the input
    counts.  ``config.sigma`` is ignored; the stabilized sigma is derived
    from the data.
    """
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim == 2:
        stack = stack[None]
    if stack.ndim != 3 or stack.shape[0] < 1:
        raise ValueError("expected a nonempty (L, H, W) stack")
    for frame in stack:
        validate_frame(frame)
    cfg = config if config is not None else default_config()

    if method.variant == "bm3d1":
        averaged = average_frames(stack)
        return _stabilized(averaged[None], replace(cfg, ref_scope="all"))
    if method.variant == "bm3d2":
        per_frame = [_stabilized(frame[None], replace(cfg, ref_scope="all"))
                     for frame in stack]
        return average_frames(np.stack(per_frame))
    if method.variant == "bm3d3":
        if not 0 <= method.ref_frame < stack.shape[0]:
            raise ValueError(f"ref_frame {method.ref_frame} out of range")
        return _stabilized(stack, replace(cfg, ref_scope=int(method.ref_frame),
                                          search_scope="all"))
    if method.variant == "bm3d4":
        return _stabilized(stack, replace(cfg, ref_scope="all", search_scope="all"))
    # bm3d4_sigma: matching runs on low-pass filtered raw counts, the
    # filtered pixels themselves are never denoised or aggregated.
    spec = LowPassSpec(sigma_lp=float(method.sigma_lp), shape=method.lp_shape)
    match_raw = lowpass_stack(stack, spec)
    return _stabilized(stack, replace(cfg, ref_scope="all", search_scope="all"),
                       match_raw=match_raw)
