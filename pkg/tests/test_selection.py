import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reuselab as rl
from reuselab.datasets import Instance
from reuselab.errors import DegenerateGridError, InvalidArgumentError, TraceFormatError
from reuselab.learners import weighted
from reuselab.seeding import derive_seed
from reuselab.selection import (
    IWAL,
    IWAL_NO_WEIGHTS,
    LinearHypothesisGrid,
    TraceRow,
    load_trace,
    trace_to_text,
)


class TestSelectionProbability:
    def test_twenty_hand_evaluated_triples(self):
        # oracle written out longhand, natural log
        triples = [
            (0.5, 2, 0.1), (0.5, 10, 0.1), (1.0, 2, 1.0), (1.0, 101, 0.01),
            (2.0, 5, 0.5), (0.1, 3, 0.001), (3.0, 1000, 2.0), (0.25, 50, 0.05),
            (4.0, 7, 10.0), (1.5, 20, 0.2), (0.75, 200, 0.9), (5.0, 12, 0.3),
            (0.01, 2, 1e-6), (10.0, 10**6, 100.0), (0.33, 33, 0.033),
            (2.5, 4, 0.25), (0.9, 9, 0.09), (7.0, 70, 7.0), (0.6, 600, 0.006),
            (1.2, 12000, 1.2),
        ]
        assert len(triples) == 20
        for g, k, c0 in triples:
            expected = min(1.0, (1.0 / g**2 + 1.0 / g) * c0 * math.log(k) / (k - 1))
            assert rl.selection_probability(g, k, c0) == pytest.approx(expected, abs=1e-12)

    def test_worked_example(self):
        # g=1, k=101, c0=0.01: bracket is 2, so p = 2*0.01*ln(101)/100
        p = rl.selection_probability(1.0, 101, 0.01)
        assert p == pytest.approx(2 * 0.01 * math.log(101) / 100, abs=1e-15)
        assert p == pytest.approx(9.23e-4, rel=5e-3)

    def test_zero_difference_saturates(self):
        for k in (2, 10, 10**6):
            for c0 in (1e-9, 1.0):
                assert rl.selection_probability(0.0, k, c0) == 1.0

    def test_large_c0_clamps_to_one(self):
        assert rl.selection_probability(1.0, 100, 1e9) == 1.0

    def test_log_base_knob(self):
        natural = rl.selection_probability(1.0, 101, 0.01)
        base2 = rl.selection_probability(1.0, 101, 0.01, log_base=2.0)
        assert base2 == pytest.approx(natural / math.log(2), rel=1e-12)

    def test_preconditions(self):
        with pytest.raises(InvalidArgumentError):
            rl.selection_probability(1.0, 1, 0.1)
        with pytest.raises(InvalidArgumentError):
            rl.selection_probability(-1.0, 5, 0.1)
        with pytest.raises(InvalidArgumentError):
            rl.selection_probability(1.0, 5, 0.0)

    @given(
        g1=st.floats(1e-6, 1e3), g2=st.floats(1e-6, 1e3),
        k=st.integers(2, 10**6), c0=st.floats(1e-9, 1e3),
    )
    @settings(max_examples=200, deadline=None)
    def test_nonincreasing_in_g(self, g1, g2, k, c0):
        lo, hi = sorted((g1, g2))
        assert rl.selection_probability(hi, k, c0) <= rl.selection_probability(lo, k, c0)

    @given(k=st.integers(3, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_bracket_nonincreasing_in_k(self, k):
        assert math.log(k + 1) / k <= math.log(k) / (k - 1)

    @given(
        g=st.floats(1e-3, 1e3), k=st.integers(2, 10**5),
        c1=st.floats(1e-9, 1e3), c2=st.floats(1e-9, 1e3),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_c0(self, g, k, c1, c2):
        lo, hi = sorted((c1, c2))
        assert rl.selection_probability(g, k, lo) <= rl.selection_probability(g, k, hi)


class TestSurrogate:
    def test_zero_score_gives_zero(self):
        assert rl.surrogate_error_difference(0.0, 1.0) == 0.0
        assert rl.surrogate_error_difference(0.5, 0.0) == 0.0

    def test_monotone_in_score_under_fixed_history(self):
        values = [rl.surrogate_error_difference(s, 0.5) for s in (0.1, 0.2, 0.4, 0.9)]
        assert values == sorted(values)

    def test_boundary_vs_edge_scores_on_uniform_line(self):
        pool = rl.gen_uniform_line(1000, seed=30)
        ranker = rl.fit_online_linear(rl.dataset_as_weighted(pool))
        scores = np.abs(np.asarray(ranker.score(pool.x)))
        mean_abs = float(scores.mean())
        g = scores / mean_abs
        edge = g[np.abs(pool.x[:, 0]) > 0.8]
        center = g[np.abs(pool.x[:, 0]) < 0.2]
        assert edge.mean() > center.mean()


def brute_force_difference(labeled, candidate, grid):
    """Plain-loop ERM over the grid, no numpy vectorization."""
    best_overall, best_overall_idx = None, None
    errs = []
    for h in range(len(grid)):
        err = 0.0
        for wi in labeled:
            pred = 1 if sum(
                grid.w[h][j] * wi.instance.features[j] for j in range(grid.w.shape[1])
            ) - grid.b[h] >= 0 else -1
            if pred != wi.instance.label:
                err += wi.weight
        errs.append(err)
        if best_overall is None or err < best_overall:
            best_overall, best_overall_idx = err, h
    cand_pred_best = 1 if sum(
        grid.w[best_overall_idx][j] * candidate.features[j] for j in range(grid.w.shape[1])
    ) - grid.b[best_overall_idx] >= 0 else -1
    disagree = []
    for h in range(len(grid)):
        pred = 1 if sum(
            grid.w[h][j] * candidate.features[j] for j in range(grid.w.shape[1])
        ) - grid.b[h] >= 0 else -1
        if pred != cand_pred_best:
            disagree.append(errs[h])
    total = sum(wi.weight for wi in labeled)
    return (min(disagree) - best_overall) / total


class TestExactErrorDifference:
    def small_grid(self):
        # thresholds -0.5, 0.0, 0.4, 0.6 in both directions
        return rl.build_linear_grid([-0.5], [0.6], 4)

    def test_empty_labeled_set_gives_zero(self):
        grid = self.small_grid()
        assert rl.exact_error_difference([], Instance(np.array([0.2]), 1), grid) == 0.0

    def test_hand_enumerated_single_point(self):
        # one labeled point at x=0.5 (+1). A candidate at x=0.6 can only be
        # flipped by hypotheses that also misclassify the labeled point, so
        # the gap is exactly one normalized unit of weight.
        thresholds = np.array([-0.5, 0.0, 0.4, 0.6])
        grid = LinearHypothesisGrid(
            w=np.concatenate([np.ones(4), -np.ones(4)])[:, None],
            b=np.concatenate([thresholds, -thresholds]),
        )
        labeled = [weighted([0.5], 1, 1.0)]
        g = rl.exact_error_difference(labeled, Instance(np.array([0.6]), 1), grid)
        assert g == 1.0
        # a candidate at x=0.2 can be flipped for free by the threshold at 0.4
        g2 = rl.exact_error_difference(labeled, Instance(np.array([0.2]), 1), grid)
        assert g2 == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(31)
        grid = rl.build_linear_grid([-1.0, -1.0], [1.0, 1.0], 7)
        labeled = [
            weighted(rng.uniform(-1, 1, size=2), 1 if rng.random() < 0.5 else -1,
                     rng.uniform(1, 5))
            for _ in range(9)
        ]
        for _ in range(5):
            candidate = Instance(rng.uniform(-1, 1, size=2), 1)
            mine = rl.exact_error_difference(labeled, candidate, grid)
            oracle = brute_force_difference(labeled, candidate, grid)
            assert mine == pytest.approx(oracle, abs=1e-12)
            assert mine >= 0.0

    def test_separated_set_deep_candidate_has_positive_gap(self):
        grid = rl.build_linear_grid([-1.0], [1.0], 21)
        labeled = [weighted([x], -1 if x < 0 else 1) for x in (-0.8, -0.5, -0.2, 0.2, 0.5, 0.8)]
        deep = Instance(np.array([0.9]), 1)
        g = rl.exact_error_difference(labeled, deep, grid)
        assert g == pytest.approx(brute_force_difference(labeled, deep, grid), abs=1e-12)
        assert g > 0.0

    def test_boundary_candidate_has_zero_gap(self):
        grid = rl.build_linear_grid([-1.0], [1.0], 21)
        labeled = [weighted([x], -1 if x < 0 else 1) for x in (-0.8, -0.4, 0.4, 0.8)]
        assert rl.exact_error_difference(labeled, Instance(np.array([0.0]), 1), grid) == 0.0

    def test_degenerate_grid(self):
        # every hypothesis predicts +1 for the candidate
        grid = LinearHypothesisGrid(w=np.array([[1.0], [1.0]]), b=np.array([-5.0, -4.0]))
        labeled = [weighted([0.5], 1)]
        with pytest.raises(DegenerateGridError):
            rl.exact_error_difference(labeled, Instance(np.array([0.0]), 1), grid)

    def test_grid_rejects_high_dim(self):
        with pytest.raises(InvalidArgumentError):
            rl.build_linear_grid([0, 0, 0], [1, 1, 1], 8)


class TestSelectRandom:
    def test_full_pool(self):
        train = rl.gen_uniform_line(20, seed=32)
        res = rl.select_random(train, 20)
        assert res.selected_count == 20
        assert all(wi.weight == 1.0 for wi in res.selected)
        assert all(row.probability == 1.0 for row in res.trace)

    def test_empty_selection(self):
        train = rl.gen_uniform_line(20, seed=33)
        assert rl.select_random(train, 0).selected_count == 0

    def test_prefix_follows_train_order(self):
        train = rl.gen_uniform_line(20, seed=34)
        res = rl.select_random(train, 5)
        got = np.stack([wi.instance.features for wi in res.selected])
        assert np.array_equal(got, train.x[:5])

    def test_too_many_requested(self):
        train = rl.gen_uniform_line(20, seed=35)
        with pytest.raises(InvalidArgumentError):
            rl.select_random(train, 21)


class TestSelectUncertainty:
    def test_prefix_concentrates_near_boundary(self):
        pool = rl.gen_uniform_line(1000, seed=36)
        ranker = rl.fit_online_linear(rl.dataset_as_weighted(pool))
        res = rl.select_uncertainty(pool, 10, ranker)
        picked = np.abs(np.stack([wi.instance.features for wi in res.selected])[:, 0])
        cutoff = np.percentile(np.abs(pool.x[:, 0]), 5)
        assert picked.max() < cutoff

    def test_whole_pool_regardless_of_ranking(self):
        pool = rl.gen_uniform_line(50, seed=37)
        ranker = rl.fit_online_linear(rl.dataset_as_weighted(pool))
        res = rl.select_uncertainty(pool, 50, ranker)
        assert res.selected_count == 50

    def test_ties_break_by_original_index(self):
        pool = rl.gen_uniform_line(10, seed=38)
        zero_model = rl.make_online_model(1)  # every score is 0: all tied
        res = rl.select_uncertainty(pool, 3, zero_model)
        got = np.stack([wi.instance.features for wi in res.selected])
        assert np.array_equal(got, pool.x[:3])


class TestSelectIwal:
    def test_huge_c0_selects_everything_with_unit_weights(self):
        train = rl.gen_uniform_line(200, seed=39)
        res = rl.select_iwal(train, rl.IwalConfig(c0=1e9, seed=40))
        assert res.selected_count == 200
        assert all(wi.weight == 1.0 for wi in res.selected)
        assert all(row.probability == 1.0 for row in res.trace)
        baseline = rl.select_random(train, 200)
        got = np.stack([wi.instance.features for wi in res.selected])
        want = np.stack([wi.instance.features for wi in baseline.selected])
        assert np.array_equal(got, want)

    def test_trace_invariants(self):
        train = rl.gen_uniform_line(500, seed=41)
        res = rl.select_iwal(train, rl.IwalConfig(c0=0.5, seed=42))
        assert len(res.trace) == 500
        for row in res.trace:
            assert 0.0 < row.probability <= 1.0
            assert row.coin == row.selected
            if row.selected:
                assert row.weight == 1.0 / row.probability
                assert abs(row.weight * row.probability - 1.0) < 1e-12
            else:
                assert row.weight == 0.0
        assert res.selected_count == sum(r.selected for r in res.trace)
        assert res.selected_count >= 1  # the first example is always labeled

    def test_first_example_always_selected(self):
        train = rl.gen_uniform_line(100, seed=43)
        res = rl.select_iwal(train, rl.IwalConfig(c0=1e-9, seed=44))
        assert res.trace[0].probability == 1.0
        assert res.trace[0].selected == 1

    def test_no_weights_variant_keeps_probabilities(self):
        train = rl.gen_uniform_line(300, seed=45)
        base = rl.select_iwal(train, rl.IwalConfig(c0=0.5, seed=46))
        stripped = rl.without_weights(base)
        assert stripped.strategy == IWAL_NO_WEIGHTS
        assert stripped.selected_count == base.selected_count
        assert all(wi.weight == 1.0 for wi in stripped.selected)
        for a, b in zip(base.trace, stripped.trace):
            assert a.probability == b.probability
            assert a.selected == b.selected
            assert b.weight in (0.0, 1.0)

    def test_same_seed_reproduces_pass(self):
        train = rl.gen_uniform_line(400, seed=47)
        a = rl.select_iwal(train, rl.IwalConfig(c0=0.7, seed=48))
        b = rl.select_iwal(train, rl.IwalConfig(c0=0.7, seed=48))
        assert a.trace == b.trace

    def test_mean_count_monotone_in_c0(self):
        lo, hi = [], []
        for s in range(60):
            train = rl.gen_uniform_line(500, seed=derive_seed(49, s))
            lo.append(rl.select_iwal(train, rl.IwalConfig(c0=1e-5, seed=derive_seed(50, s))).selected_count)
            hi.append(rl.select_iwal(train, rl.IwalConfig(c0=1e-3, seed=derive_seed(50, s))).selected_count)
        assert np.mean(hi) >= np.mean(lo)

    def test_exact_mode_pass_runs_and_respects_invariants(self):
        train = rl.gen_uniform_line(200, seed=51)
        res = rl.select_iwal(
            train, rl.IwalConfig(c0=0.01, gk_mode="exact-erm", erm_grid_resolution=32, seed=52)
        )
        assert 1 <= res.selected_count <= 200
        assert all(0 < r.probability <= 1 for r in res.trace)
        assert all(r.g >= 0 for r in res.trace)

    def test_unbiasedness_quick(self):
        # small version of the weighted-error unbiasedness check
        pool = rl.gen_uniform_line(2000, seed=53)
        model = rl.learners.LeastSquaresModel(theta=np.array([1.0]), bias=0.2)
        truth = rl.zero_one_error(model, pool)
        vals = [
            rl.weighted_error(
                model,
                list(rl.select_iwal(pool, rl.IwalConfig(c0=3.0, seed=derive_seed(54, r))).selected),
            )
            for r in range(200)
        ]
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - truth) <= 5 * se


class TestTraceFormat:
    def _result(self):
        train = rl.gen_uniform_line(50, seed=55)
        return rl.select_iwal(train, rl.IwalConfig(c0=0.9, seed=56)), train

    def test_round_trip(self, tmp_path):
        res, _ = self._result()
        path = tmp_path / "t.csv"
        spec = {"kind": "uniform-line", "n": 50, "seed": 55}
        rl.save_trace(path, res, spec, None)
        header, rows = load_trace(path)
        assert header["strategy"] == IWAL
        assert header["c0"] == 0.9
        assert header["dataset"] == spec
        assert rows == list(res.trace)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("index,g,probability,coin,selected,weight\n")
        with pytest.raises(TraceFormatError):
            load_trace(path)

    def test_corrupt_row_rejected(self, tmp_path):
        res, _ = self._result()
        path = tmp_path / "t.csv"
        text = trace_to_text(res, {"kind": "uniform-line", "n": 50, "seed": 55})
        lines = text.splitlines()
        lines[5] = "oops"
        path.write_text("\n".join(lines))
        with pytest.raises(TraceFormatError):
            load_trace(path)
