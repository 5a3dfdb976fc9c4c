import numpy as np
import pytest

from bm3dstack import matching as mt


def brute_force_group(stack, ref, cfg, frame_scope="all"):
    """Exhaustive oracle: score every candidate in the window, rank with a
    stable sort, truncate to a power of two."""
    n = cfg.patch_size
    layers, height, width = stack.shape
    frames = range(layers) if frame_scope == "all" else [frame_scope]
    ref_patch = stack[ref[0], ref[1]:ref[1] + n, ref[2]:ref[2] + n]
    cands = []
    for f in frames:
        for r in range(max(0, ref[1] - cfg.search_radius),
                       min(height - n, ref[1] + cfg.search_radius) + 1):
            for c in range(max(0, ref[2] - cfg.search_radius),
                           min(width - n, ref[2] + cfg.search_radius) + 1):
                if (f, r, c) == tuple(ref):
                    continue
                diff = stack[f, r:r + n, c:c + n] - ref_patch
                cands.append(((f, r, c), np.mean(diff * diff)))
    order = np.argsort([d for _, d in cands], kind="stable")
    size = mt.largest_pow2_at_most(min(cfg.max_group, len(cands) + 1))
    return [tuple(ref)] + [cands[i][0] for i in order[:size - 1]]


def test_patch_distance_examples():
    a = np.zeros((8, 8))
    assert mt.patch_distance(a, a) == 0.0
    assert mt.patch_distance(a, np.ones((8, 8))) == 1.0
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 8, 8))
    manual = float(np.sum((x - y) ** 2) / 64.0)
    assert abs(mt.patch_distance(x, y) - manual) < 1e-14
    with pytest.raises(ValueError):
        mt.patch_distance(a, np.zeros((4, 4)))


def test_find_similar_constant_stack_tie_break():
    stack = np.full((5, 24, 24), 2.0)
    cfg = mt.SearchConfig(search_radius=4, max_group=16)
    ref = mt.extract_patch(stack, 2, 8, 8)
    group = mt.find_similar(ref, stack, cfg)
    assert group.size == 16
    assert tuple(group.locations[0]) == (2, 8, 8)
    # All distances tie, so companions follow (frame, row, col) order.
    expected = []
    for f in range(5):
        for r in range(4, 13):
            for c in range(4, 13):
                if (f, r, c) != (2, 8, 8):
                    expected.append((f, r, c))
    assert [tuple(t) for t in group.locations[1:]] == expected[:15]


def test_find_similar_planted_duplicate():
    rng = np.random.default_rng(1)
    stack = rng.normal(size=(5, 32, 32))
    ref = mt.extract_patch(stack, 0, 10, 12)
    stack[3, 11:19, 9:17] = ref.values  # exact duplicate in frame 3
    cfg = mt.SearchConfig(search_radius=10, max_group=8)
    group = mt.find_similar(mt.extract_patch(stack, 0, 10, 12), stack, cfg)
    assert tuple(group.locations[1]) == (3, 11, 9)


def test_find_similar_matches_brute_force_oracle():
    rng = np.random.default_rng(2)
    for trial in range(100):
        layers = int(rng.integers(1, 4))
        stack = rng.normal(size=(layers, 32, 32))
        cfg = mt.SearchConfig(search_radius=int(rng.integers(3, 20)),
                              max_group=int(rng.choice([4, 8, 16])))
        r = int(rng.integers(0, 32 - cfg.patch_size + 1))
        c = int(rng.integers(0, 32 - cfg.patch_size + 1))
        f = int(rng.integers(0, layers))
        ref = mt.extract_patch(stack, f, r, c)
        group = mt.find_similar(ref, stack, cfg)
        oracle = brute_force_group(stack, (f, r, c), cfg)
        assert [tuple(t) for t in group.locations] == oracle, trial


def test_find_similar_single_scope_and_rank_order():
    rng = np.random.default_rng(3)
    stack = rng.normal(size=(3, 32, 32))
    cfg = mt.SearchConfig(search_radius=8, max_group=16)
    ref = mt.extract_patch(stack, 1, 5, 5)
    group = mt.find_similar(ref, stack, cfg, frame_scope=1)
    assert set(group.locations[:, 0]) == {1}
    dists = [mt.patch_distance(ref.values, p) for p in group.patches[1:]]
    assert all(a <= b + 1e-15 for a, b in zip(dists, dists[1:]))
    oracle = brute_force_group(stack, (1, 5, 5), cfg, frame_scope=1)
    assert [tuple(t) for t in group.locations] == oracle


def test_enumerate_references_grid():
    cfg = mt.SearchConfig(stride=3)
    refs = mt.enumerate_references((1, 16, 16), cfg, ref_scope="all")
    assert sorted(set(refs[:, 1])) == [0, 3, 6, 8]
    assert sorted(set(refs[:, 2])) == [0, 3, 6, 8]
    assert refs.shape == (16, 3)

    refs_all = mt.enumerate_references((4, 16, 16), cfg, ref_scope="all")
    assert refs_all.shape == (64, 3)
    refs_one = mt.enumerate_references((4, 16, 16), cfg, ref_scope=2)
    assert refs_one.shape == (16, 3) and set(refs_one[:, 0]) == {2}

    wide = mt.enumerate_references((1, 20, 20), mt.SearchConfig(stride=50), "all")
    assert [tuple(t) for t in wide] == [(0, 0, 0), (0, 0, 12), (0, 12, 0), (0, 12, 12)]


def test_reference_grid_covers_every_pixel():
    rng = np.random.default_rng(4)
    for _ in range(20):
        h = int(rng.integers(16, 50))
        w = int(rng.integers(16, 50))
        stride = int(rng.integers(1, 9))  # coverage needs stride <= patch size
        cfg = mt.SearchConfig(stride=stride)
        refs = mt.enumerate_references((1, h, w), cfg, "all")
        hit = np.zeros((h, w), dtype=bool)
        for _, r, c in refs:
            hit[r:r + 8, c:c + 8] = True
        assert hit.all()


def test_search_config_validation():
    with pytest.raises(ValueError):
        mt.SearchConfig(stride=0)
    with pytest.raises(ValueError):
        mt.SearchConfig(max_group=0)
