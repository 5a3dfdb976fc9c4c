"""Two-step collaborative filtering engine over frame stacks.

The engine is generic in where reference patches come from (one frame or
all frames) and where the search looks (the reference's own frame or the
whole stack).  Stage one hard-thresholds groups in a wavelet/WHT domain;
stage two Wiener-filters DCT/WHT spectra using stage-one output as the
pilot.  Per-patch estimates are pushed into per-frame accumulators and
combined by weighted aggregation.

Work is split into fixed-size chunks of reference patches.  Each chunk
accumulates into private buffers which are merged in chunk order, so the
output is bitwise identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .matching import SearchConfig, enumerate_references
from .transforms import kaiser_2d, transform_pair


class CoverageError(RuntimeError):
    """A requested estimate has pixels no patch ever contributed to."""


@dataclass(frozen=True)
class EngineConfig:
    """Parameters shared by both filtering stages."""

    sigma: float
    ref_scope: int | str = "all"       # "all" or a single frame index
    search_scope: str = "all"          # "all" or "self"
    step1: SearchConfig = field(default_factory=lambda: SearchConfig(max_group=16))
    step2: SearchConfig = field(default_factory=lambda: SearchConfig(max_group=32))
    step1_basis: str = "bior15"
    step2_basis: str = "dct"
    lambda3d: float = 2.7
    kaiser_beta: float = 2.0
    jobs: int = 1
    chunk_size: int = 2048

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.search_scope not in ("all", "self"):
            raise ValueError("search_scope must be 'all' or 'self'")
        if self.ref_scope != "all" and int(self.ref_scope) < 0:
            raise ValueError("ref_scope must be 'all' or a frame index")
        if self.jobs < 1 or self.chunk_size < 1:
            raise ValueError("jobs and chunk_size must be >= 1")


@dataclass
class Accumulator:
    """Numerator and denominator grids, one pair per frame."""

    num: np.ndarray  # (L, H, W)
    den: np.ndarray  # (L, H, W)


def aggregate(acc: Accumulator, frame: int | None = None) -> np.ndarray:
    """Pixel-wise numerator / denominator.

    With ``frame`` given, aggregates that frame's buffers; otherwise sums
    the buffers over frames first (the cross-frame aggregation).  Raises
    :class:`CoverageError` wherever the denominator is zero.
    """
    if frame is None:
        num = acc.num.sum(axis=0)
        den = acc.den.sum(axis=0)
    else:
        num = acc.num[frame]
        den = acc.den[frame]
    if not np.all(den > 0):
        holes = int(np.count_nonzero(den == 0))
        raise CoverageError(f"{holes} pixels received no patch contribution")
    return num / den


@dataclass
class StageResult:
    """Output of one filtering stage."""

    accumulator: Accumulator
    combined: np.ndarray            # cross-frame aggregate, always defined
    per_frame: np.ndarray | None    # (L, H, W); None when refs span one frame


def _as_stack(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError("expected a (L, H, W) stack")
    return arr


def _run_chunks(kernel, stacks, refs, radius, kcap, search_all, T, Ti,
                scalars, kaiser, jobs, chunk_size) -> Accumulator:
    shape = stacks[0].shape
    chunks = [refs[i:i + chunk_size] for i in range(0, refs.shape[0], chunk_size)]

    def run(chunk):
        num = np.zeros(shape)
        den = np.zeros(shape)
        kernel(*stacks, chunk, radius, kcap, search_all, T, Ti, *scalars,
               kaiser, num, den)
        return num, den

    total_num = np.zeros(shape)
    total_den = np.zeros(shape)
    if jobs == 1:
        results = map(run, chunks)
        for num, den in results:
            total_num += num
            total_den += den
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for num, den in pool.map(run, chunks):
                total_num += num
                total_den += den
    return Accumulator(num=total_num, den=total_den)


def _finish(acc: Accumulator, cfg: EngineConfig) -> StageResult:
    combined = aggregate(acc)
    per_frame = None
    if cfg.ref_scope == "all":
        per_frame = np.stack([aggregate(acc, f) for f in range(acc.num.shape[0])])
    return StageResult(accumulator=acc, combined=combined, per_frame=per_frame)


def hard_stage(noisy: np.ndarray, match_source: np.ndarray,
               cfg: EngineConfig) -> StageResult:
    """Stage one: group on ``match_source``, filter pixels from ``noisy``.

    ``match_source`` is either ``noisy`` itself or its low-pass filtered
    version; grouped pixel values always come from ``noisy``.
    """
    noisy = _as_stack(noisy)
    match_source = _as_stack(match_source)
    if noisy.shape != match_source.shape:
        raise ValueError("noisy and match_source stacks must share shape")
    refs = enumerate_references(noisy.shape, cfg.step1, cfg.ref_scope)
    T, Ti = transform_pair(cfg.step1_basis, cfg.step1.patch_size)
    kaiser = kaiser_2d(cfg.step1.patch_size, cfg.kaiser_beta)
    tau = cfg.lambda3d * cfg.sigma
    acc = _run_chunks(
        _kernels.hard_chunk, (noisy, match_source), refs,
        cfg.step1.search_radius, _pow2_cap(cfg.step1.max_group),
        cfg.search_scope == "all", np.ascontiguousarray(T),
        np.ascontiguousarray(Ti), (tau, cfg.sigma ** 2), kaiser,
        cfg.jobs, cfg.chunk_size)
    return _finish(acc, cfg)


def wiener_stage(noisy: np.ndarray, basic: np.ndarray,
                 cfg: EngineConfig) -> StageResult:
    """Stage two: group on ``basic``, Wiener-filter ``noisy`` spectra.

    ``basic`` supplies both the matching surface and the pilot spectra;
    it must be pixel-aligned with ``noisy``.
    """
    noisy = _as_stack(noisy)
    basic = _as_stack(basic)
    if noisy.shape != basic.shape:
        raise ValueError("noisy and basic stacks must share shape")
    refs = enumerate_references(basic.shape, cfg.step2, cfg.ref_scope)
    T, Ti = transform_pair(cfg.step2_basis, cfg.step2.patch_size)
    kaiser = kaiser_2d(cfg.step2.patch_size, cfg.kaiser_beta)
    acc = _run_chunks(
        _kernels.wiener_chunk, (noisy, basic), refs,
        cfg.step2.search_radius, _pow2_cap(cfg.step2.max_group),
        cfg.search_scope == "all", np.ascontiguousarray(T),
        np.ascontiguousarray(Ti), (cfg.sigma ** 2,), kaiser,
        cfg.jobs, cfg.chunk_size)
    return _finish(acc, cfg)


def _pow2_cap(max_group: int) -> int:
    size = 1
    while size * 2 <= max_group:
        size *= 2
    return size


def single_frame_config(cfg: EngineConfig) -> EngineConfig:
    """Restrict an engine config to a one-frame stack."""
    return replace(cfg, ref_scope=0, search_scope="all")
