import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from eps_sampler import (
    PatchGrid,
    SamplerConfig,
    ScoreField,
    cluster_histogram,
    sample_random,
    sample_top_fraction,
    sample_video,
    score_video,
    select_frame,
    slice_grid,
)

from conftest import make_sequence, noise_video

score_lists = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=200)


def field(frame, sf, tf=None, cols=None):
    sf = np.asarray(sf, dtype=float)
    cols = cols or sf.size
    rows = sf.size // cols
    grid = PatchGrid(8, 8, cols, rows)
    tf = None if tf is None else np.asarray(tf, dtype=float).reshape(rows, cols)
    return ScoreField(frame, grid, sf.reshape(rows, cols), tf)


def test_cluster_example():
    c = cluster_histogram([0, 1, 2, 3], 2)
    assert c.edges.tolist() == [0, 1.5, 3]
    assert c.assignment.tolist() == [1, 1, 2, 2]
    assert c.members(2).tolist() == [2, 3]
    assert c.top_threshold == 1.5


def test_cluster_degenerate_range_goes_to_top():
    c = cluster_histogram([5.0] * 6, 3)
    assert c.assignment.tolist() == [3] * 6
    assert c.top_threshold == 5.0


def test_single_cluster_takes_everything(rng):
    c = cluster_histogram(rng.random(50), 1)
    assert (c.assignment == 1).all()


@pytest.mark.parametrize("scores,n", [([], 2), ([1.0, float("nan")], 2), ([1.0], 0),
                                      ([float("inf"), 1.0], 2)])
def test_cluster_rejects_bad_input(scores, n):
    with pytest.raises(ValueError):
        cluster_histogram(scores, n)


@given(score_lists, st.integers(1, 12))
def test_cluster_partition_and_right_edge(scores, n):
    c = cluster_histogram(scores, n)
    s = np.asarray(scores)
    assert c.assignment.shape == s.shape
    assert ((c.assignment >= 1) & (c.assignment <= n)).all()
    assert sum(c.members(k).size for k in range(1, n + 1)) == s.size
    assert c.assignment[np.argmax(s)] == n
    assert c.edges[0] == s.min() and c.edges[-1] == s.max()
    assert (np.diff(c.edges) >= 0).all()
    # top bin is exactly the scores at or above its lower edge
    assert np.array_equal(c.assignment == n, s >= c.top_threshold)


@given(score_lists, st.integers(1, 12))
def test_cluster_order_is_consistent_with_scores(scores, n):
    c = cluster_histogram(scores, n)
    s = np.asarray(scores)
    order = np.argsort(s, kind="stable")
    assert (np.diff(c.assignment[order]) >= 0).all()


@given(score_lists, st.integers(1, 11))
def test_top_threshold_nondecreasing_in_n(scores, n):
    assert cluster_histogram(scores, n).top_threshold <= cluster_histogram(scores, n + 1).top_threshold


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=100),
       st.integers(1, 8), st.integers(-20, 20))
def test_power_of_two_scaling_is_exact(scores, n, k):
    a = cluster_histogram(scores, n).assignment
    b = cluster_histogram(np.asarray(scores) * 2.0 ** k, n).assignment
    assert np.array_equal(a, b)


@settings(max_examples=50)
@given(score_lists, st.integers(1, 8), st.randoms(use_true_random=False))
def test_permutation_only_permutes_assignment(scores, n, rnd):
    perm = list(range(len(scores)))
    rnd.shuffle(perm)
    a = cluster_histogram(scores, n).assignment
    b = cluster_histogram([scores[p] for p in perm], n).assignment
    assert np.array_equal(a[perm], b)


def test_select_first_frame_takes_top_sf_bin():
    sel = select_frame(field(1, [0, 1, 2, 3], cols=2), 2)
    assert sel.selected == ((1, 0), (1, 1))
    assert sel.sf_threshold == 1.5 and sel.tf_threshold is None


def test_select_later_frame_intersects():
    # patches A, B, C, D; top SF = {A, B}, top TF = {B, C}
    sel = select_frame(field(2, [9, 10, 0, 1], [0, 10, 9, 1]), 2)
    assert sel.selected == ((0, 1),)


def test_select_disjoint_top_bins_is_empty():
    sel = select_frame(field(2, [10, 0, 0, 0], [0, 0, 10, 0]), 2)
    assert sel.selected == ()
    assert sel.tf_threshold == 5.0


def test_select_keeps_scores_on_request():
    sel = select_frame(field(2, [1, 2], [3, 4]), 2, keep_scores=True)
    assert sel.scores == ((1.0, 3.0), (2.0, 4.0))


def test_tf_presence_must_match_frame_index():
    with pytest.raises(ValueError):
        field(1, [1, 2], [1, 2])
    with pytest.raises(ValueError):
        field(3, [1, 2])


def test_select_rejects_nan_scores():
    with pytest.raises(ValueError):
        select_frame(field(2, [1, 2], [float("nan"), 1]), 2)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), frame=st.integers(1, 3))
def test_selection_threshold_property(seed, n, frame):
    r = np.random.default_rng(seed)
    sf = r.random(24) * 100
    tf = None if frame == 1 else r.random(24) * 50
    f = field(frame, sf, tf, cols=6)
    sel = select_frame(f, n)
    picked = np.zeros(24, dtype=bool)
    for row, col in sel.selected:
        picked[row * 6 + col] = True
    expect = sf >= sel.sf_threshold
    if tf is not None:
        expect &= tf >= sel.tf_threshold
    assert np.array_equal(picked, expect)
    if frame == 1:
        assert picked.any()


def test_select_positive_scaling(rng):
    for _ in range(200):
        sf, tf = rng.random(30), rng.random(30)
        c = rng.uniform(1e-3, 1e3)
        a = select_frame(field(2, sf, tf, cols=6), 3).selected
        b = select_frame(field(2, sf * c, tf * c, cols=6), 3).selected
        assert a == b


def test_static_video_reselects_top_sf_every_frame():
    frame = noise_video(1, 192, 128, seed=4)[0]
    frame[:64, :64] = 50  # one flat patch, the rest noise
    seq = make_sequence([frame] * 5)
    m = sample_video(seq, SamplerConfig(64, 64, 2))
    first = m.frames[0].selected
    assert first and (0, 0) not in first
    assert all(f.selected == first for f in m.frames)
    assert all(f.tf_threshold == 0.0 for f in m.frames[1:])
    assert m.stats.fraction == pytest.approx(5 * len(first) / (5 * 6))


def test_sample_video_structure():
    seq = make_sequence(noise_video(30, 960, 540, seed=8))
    m = sample_video(seq, SamplerConfig(64, 64, 2))
    assert len(m.frames) == 30
    assert m.grid.n_patches == 120
    assert all(0 <= f.count <= 120 for f in m.frames)
    assert m.stats.total_candidates == 3600
    m5 = sample_video(seq, SamplerConfig(64, 64, 5))
    for a, b in zip(m.frames, m5.frames):
        assert b.sf_threshold >= a.sf_threshold
        if a.tf_threshold is not None:
            assert b.tf_threshold >= a.tf_threshold


def test_sample_video_n1_selects_all():
    seq = make_sequence(noise_video(4, 128, 128))
    m = sample_video(seq, SamplerConfig(32, 32, 1))
    assert m.stats.fraction == 1.0


def test_sample_video_only_runs_eps():
    seq = make_sequence(noise_video(1, 64, 64))
    with pytest.raises(ValueError):
        sample_video(seq, SamplerConfig(64, 64, method="random", fraction=0.5, seed=1))


def test_sample_video_thread_count_is_invisible():
    seq = make_sequence(noise_video(7, 256, 192, seed=2))
    ref = sample_video(seq, SamplerConfig(64, 64, 2), threads=1, emit_scores=True)
    for k in (2, 3, 7, 16):
        assert sample_video(seq, SamplerConfig(64, 64, 2), threads=k, emit_scores=True) == ref


def test_random_full_fraction():
    g = slice_grid(960, 540, 64, 64)
    m = sample_random(g, 3, 1.0, seed=0)
    assert all(f.count == 120 for f in m.frames)


def test_random_count_and_determinism():
    g = slice_grid(960, 540, 64, 64)
    a = sample_random(g, 30, 0.175, seed=7)
    assert all(f.count == 21 for f in a.frames)
    assert all(len(set(f.selected)) == 21 for f in a.frames)
    assert a == sample_random(g, 30, 0.175, seed=7)
    assert a != sample_random(g, 30, 0.175, seed=8)
    assert len({f.selected for f in a.frames}) > 1


def test_random_is_roughly_uniform():
    g = slice_grid(40, 40, 10, 10)  # 16 patches
    m = sample_random(g, 4000, 0.25, seed=11)
    hits = np.zeros(16)
    for f in m.frames:
        for r, c in f.selected:
            hits[r * 4 + c] += 1
    # each patch expected 1000 times; binomial sd ~27
    assert np.abs(hits - 1000).max() < 150


@pytest.mark.parametrize("r", [0, -0.1, 1.5, float("nan")])
def test_baselines_reject_bad_fraction(r):
    g = slice_grid(64, 64, 32, 32)
    with pytest.raises(ValueError):
        sample_random(g, 1, r, seed=1)
    with pytest.raises(ValueError):
        sample_top_fraction([field(1, [1, 2, 3, 4], cols=2)], r)


def test_top_fraction_examples():
    assert sample_top_fraction([field(1, [0, 1, 2, 3], cols=2)], 1.0).frames[0].count == 4
    half = sample_top_fraction([field(1, [0, 1, 2, 3], cols=2)], 0.5).frames[0]
    assert set(half.selected) == {(1, 0), (1, 1)}
    tie = sample_top_fraction([field(1, [5, 5, 5, 5], cols=2)], 0.25).frames[0]
    assert tie.selected == ((0, 0),)


def test_top_fraction_rounds_up_and_dominates(rng):
    fields = score_video(make_sequence(noise_video(3, 320, 192)), slice_grid(320, 192, 64, 64))
    m = sample_top_fraction(fields, 0.175)
    for f, sel in zip(fields, m.frames):
        assert sel.count == 3  # ceil(0.175 * 15)
        chosen = np.zeros(f.sf.shape, dtype=bool)
        for r, c in sel.selected:
            chosen[r, c] = True
        assert f.sf[chosen].min() >= f.sf[~chosen].max()


def test_config_invariants():
    SamplerConfig()
    with pytest.raises(ValueError):
        SamplerConfig(method="random", fraction=0.5)
    with pytest.raises(ValueError):
        SamplerConfig(method="top-fraction")
    with pytest.raises(ValueError):
        SamplerConfig(fraction=0.5)
    with pytest.raises(ValueError):
        SamplerConfig(n_clusters=0)
    with pytest.raises(ValueError):
        SamplerConfig(method="emt")
    with pytest.raises(ValueError):
        SamplerConfig(method="random", fraction=0.5, seed=-1)
