"""Variance stabilization wrapper for Poisson data.

Pipeline order: Anscombe forward transform, affine rescaling to [0, 1],
denoising, affine rescaling back, closed-form approximation of the exact
unbiased inverse.  The stabilized noise has unit standard deviation, so
after rescaling the denoiser is told ``sigma = 1 / (max - min)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Image of zero counts under the forward transform; the inverse maps
#: everything at or below this value back to zero.
ANSCOMBE_MIN = 2.0 * np.sqrt(3.0 / 8.0)


@dataclass(frozen=True)
class VstState:
    """Affine rescale parameters captured from the stabilized data."""

    scale_min: float
    scale_max: float

    def __post_init__(self) -> None:
        if not self.scale_max > self.scale_min:
            raise ValueError("degenerate rescale range (max must exceed min)")

    @property
    def sigma_rescaled(self) -> float:
        """Stabilized unit sigma divided by the affine range."""
        return 1.0 / (self.scale_max - self.scale_min)


def anscombe_forward(values: np.ndarray) -> np.ndarray:
    """Element-wise ``2 * sqrt(z + 3/8)``; needs non-negative input."""
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0):
        raise ValueError("Anscombe transform requires non-negative values")
    return 2.0 * np.sqrt(values + 3.0 / 8.0)


def rescale_to_unit(stack: np.ndarray) -> tuple[np.ndarray, VstState]:
    """Affine map of the whole stack onto [0, 1] with one global min/max."""
    stack = np.asarray(stack, dtype=np.float64)
    lo = float(stack.min())
    hi = float(stack.max())
    if hi == lo:
        raise ValueError("constant stack cannot be rescaled to [0, 1]")
    state = VstState(scale_min=lo, scale_max=hi)
    return (stack - lo) / (hi - lo), state


def rescale_back(values: np.ndarray, state: VstState) -> np.ndarray:
    """Inverse of :func:`rescale_to_unit`."""
    values = np.asarray(values, dtype=np.float64)
    return values * (state.scale_max - state.scale_min) + state.scale_min


def exact_unbiased_inverse_cf(values: np.ndarray) -> np.ndarray:
    """Closed-form approximation of the exact unbiased inverse transform.

    I(D) = D^2/4 + sqrt(3/2)/4 * D^-1 - 11/8 * D^-2 + 5/8*sqrt(3/2) * D^-3 - 1/8
    for D above the image of zero counts; smaller values map to 0.  The
    expression tends to D^2/4 - 1/8 for large D.
    """
    values = np.asarray(values, dtype=np.float64)
    d = np.maximum(values, ANSCOMBE_MIN)
    root32 = np.sqrt(3.0 / 2.0)
    inv = (
        0.25 * d * d
        + 0.25 * root32 / d
        - 1.375 / (d * d)
        + 0.625 * root32 / (d * d * d)
        - 0.125
    )
    return np.maximum(inv, 0.0)
