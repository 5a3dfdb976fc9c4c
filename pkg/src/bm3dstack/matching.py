"""Block matching: enumerate reference patches and build 3D groups.

Similarity is plain mean squared difference over patch pixels; there is
no distance threshold, only a cap on group size.  Ties are broken by
(frame, row, col) lexicographic order, which makes results reproducible
and lets the fused engine kernels be checked against this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transforms import PATCH_SIZE


@dataclass(frozen=True)
class SearchConfig:
    """Search window and group-size parameters for one matching stage."""

    search_radius: int = 19
    stride: int = 3
    max_group: int = 16
    patch_size: int = PATCH_SIZE

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.max_group < 1:
            raise ValueError("max_group must be >= 1")
        if self.search_radius < 0:
            raise ValueError("search_radius must be >= 0")


@dataclass(frozen=True)
class Patch:
    """An N x N patch with its origin (frame, row, col)."""

    values: np.ndarray
    frame: int
    row: int
    col: int


@dataclass
class Group3D:
    """A reference patch plus its matched companions, stacked along axis 0."""

    patches: np.ndarray  # (K, N, N)
    locations: np.ndarray = field(default=None)  # (K, 3) int: frame, row, col

    @property
    def size(self) -> int:
        return self.patches.shape[0]


def patch_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over the patch pixels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"patch size mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def extract_patch(stack: np.ndarray, frame: int, row: int, col: int,
                  size: int = PATCH_SIZE) -> Patch:
    """Read one patch out of a (L, H, W) stack."""
    values = np.asarray(stack[frame, row:row + size, col:col + size], dtype=np.float64)
    if values.shape != (size, size):
        raise ValueError(f"patch at ({frame},{row},{col}) leaves the frame")
    return Patch(values=values, frame=frame, row=row, col=col)


def largest_pow2_at_most(n: int) -> int:
    if n < 1:
        raise ValueError("need at least one patch")
    return 1 << (n.bit_length() - 1)


def find_similar(ref: Patch, stack: np.ndarray, cfg: SearchConfig,
                 frame_scope: int | str = "all") -> Group3D:
    """Collect the best-matching patches around ``ref`` across the stack.

    The reference is always member 0.  Candidates are ranked by distance
    with stable (frame, row, col) tie-breaking, and the group size is
    truncated to the largest power of two that fits ``cfg.max_group``.
    ``frame_scope`` is either ``"all"`` or a single frame index.
    """
    n = cfg.patch_size
    layers, height, width = stack.shape
    frames = range(layers) if frame_scope == "all" else [int(frame_scope)]

    r0 = max(0, ref.row - cfg.search_radius)
    r1 = min(height - n, ref.row + cfg.search_radius)
    c0 = max(0, ref.col - cfg.search_radius)
    c1 = min(width - n, ref.col + cfg.search_radius)

    locs = []
    dists = []
    for f in frames:
        window = stack[f, r0:r1 + n, c0:c1 + n]
        for r in range(r0, r1 + 1):
            block = window[r - r0:r - r0 + n]
            row_cands = np.lib.stride_tricks.sliding_window_view(block, (n, n), axis=(0, 1))[0]
            diff = row_cands - ref.values[None]
            d = np.mean(diff * diff, axis=(1, 2))
            for c in range(c0, c1 + 1):
                if f == ref.frame and r == ref.row and c == ref.col:
                    continue
                locs.append((f, r, c))
                dists.append(d[c - c0])

    order = np.argsort(np.asarray(dists), kind="stable")
    group_size = largest_pow2_at_most(min(cfg.max_group, len(locs) + 1))

    chosen = [(ref.frame, ref.row, ref.col)]
    chosen += [locs[i] for i in order[: group_size - 1]]
    patches = np.stack([stack[f, r:r + n, c:c + n] for f, r, c in chosen])
    return Group3D(patches=np.asarray(patches, dtype=np.float64),
                   locations=np.asarray(chosen, dtype=np.int64))


def grid_1d(extent: int, patch: int, stride: int) -> np.ndarray:
    """Stride-spaced origins along one axis, always covering the last one."""
    last = extent - patch
    if last < 0:
        raise ValueError(f"extent {extent} too small for patch {patch}")
    pts = list(range(0, last + 1, stride))
    if pts[-1] != last:
        pts.append(last)
    return np.asarray(pts, dtype=np.int64)


def enumerate_references(stack_shape: tuple[int, int, int], cfg: SearchConfig,
                         ref_scope: int | str = "all") -> np.ndarray:
    """Reference-patch origins (frame, row, col) on the stride grid.

    ``ref_scope`` is ``"all"`` for every frame or a single frame index.
    Origins are in (frame, row, col) lexicographic order.
    """
    layers, height, width = stack_shape
    rows = grid_1d(height, cfg.patch_size, cfg.stride)
    cols = grid_1d(width, cfg.patch_size, cfg.stride)
    frames = np.arange(layers) if ref_scope == "all" else np.asarray([int(ref_scope)])
    ff, rr, cc = np.meshgrid(frames, rows, cols, indexing="ij")
    return np.stack([ff.ravel(), rr.ravel(), cc.ravel()], axis=1).astype(np.int64)
