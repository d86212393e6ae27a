import itertools
import warnings
from dataclasses import replace

import numpy as np
import pytest

from bexsam.freq import build_table
from bexsam.genbench import (
    NOISE_LEVELS,
    ConfigurationError,
    GeneratorConfig,
    benchmark_grid,
    er_o,
    er_s,
    format_grid,
    format_report,
    random_model,
    run_trials,
    sample_dataset,
    y_structure_experiment,
    y_structure_model,
)
from bexsam.model import BexsamModel, const, exact_joint, example_model, true_adjacency, var


class TestRandomModel:
    def test_zero_density(self):
        rng = np.random.default_rng(0)
        m = random_model(GeneratorConfig(d=5, n=1, p_coef=0.0), rng)
        assert not true_adjacency(m).any()
        assert all(f.monomials == frozenset() for f in m.functions)

    def test_full_density(self):
        rng = np.random.default_rng(0)
        m = random_model(GeneratorConfig(d=3, n=1, p_coef=1.0), rng)
        last = m.order[-1]
        a, b = sorted(m.order[:2])
        assert m.functions[last].monomials == {
            frozenset(), frozenset({a}), frozenset({b}), frozenset({a, b})
        }

    def test_deterministic(self):
        c = GeneratorConfig(d=6, n=1)
        assert random_model(c, np.random.default_rng(4)) == random_model(c, np.random.default_rng(4))

    def test_noise_levels(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = random_model(GeneratorConfig(d=4, n=1), rng)
            assert set(m.noise_probs) <= set(NOISE_LEVELS)

    def test_functions_respect_order(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m = random_model(GeneratorConfig(d=5, n=1), rng)
            pos = {v: k for k, v in enumerate(m.order)}
            for i, f in enumerate(m.functions):
                assert all(pos[j] < pos[i] for j in f.variables)

    @pytest.mark.parametrize(
        "kwargs", [dict(d=0, n=1), dict(d=2, n=0), dict(d=2, n=1, noise_probs=0.5),
                   dict(d=2, n=1, noise_probs=[0.2, 0.3, 0.4]), dict(d=2, n=1, alpha=0)],
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            GeneratorConfig(**kwargs)


class TestSampling:
    def test_exogenous_marginal(self):
        rng = np.random.default_rng(12)
        m = example_model((0.3, 0.2, 0.2, 0.2))
        X = sample_dataset(m, 10_000, rng)
        se = np.sqrt(0.3 * 0.7 / 10_000)
        assert abs(X[:, 0].mean() - 0.3) < 3 * se

    def test_deterministic(self):
        m = example_model()
        a = sample_dataset(m, 500, np.random.default_rng(3))
        b = sample_dataset(m, 500, np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_zero_noise_columns_follow_equations(self):
        m = example_model((0.2, 0.2, 0.2, 0.2))
        rng = np.random.default_rng(1)
        E = (rng.random((200, 4)) < 0.2).astype(np.uint8)
        X = m.evaluate(E)
        assert np.array_equal(X[:, 1], X[:, 0] ^ E[:, 1])
        assert np.array_equal(X[:, 3], (X[:, 0] | X[:, 2]) ^ E[:, 3])

    def test_total_variation_d3(self):
        rng = np.random.default_rng(21)
        m = random_model(GeneratorConfig(d=3, n=1), rng)
        t = build_table(sample_dataset(m, 100_000, rng), m.names)
        tv = 0.5 * np.abs(t.counts / t.total - exact_joint(m).probs).sum()
        assert tv < 0.02

    def test_total_variation_bound(self):
        for s in range(10):
            rng = np.random.default_rng([5, s])
            d = 1 + s % 4
            m = random_model(GeneratorConfig(d=d, n=1), rng)
            t = build_table(sample_dataset(m, 100_000, rng), m.names)
            tv = 0.5 * np.abs(t.counts / t.total - exact_joint(m).probs).sum()
            assert tv < 3 * np.sqrt(2**d / 100_000)


class TestMetrics:
    def test_er_o_single_edge(self):
        B = np.array([[0, 0], [1, 0]])
        assert er_o(B, [0, 1]) == 0
        assert er_o(B, [1, 0]) == 1

    def test_er_o_example(self):
        assert er_o(true_adjacency(example_model()), [0, 1, 2, 3]) == 0

    def test_er_o_empty_graph(self):
        assert er_o(np.zeros((3, 3)), [2, 0, 1]) == 0

    def test_er_o_not_permutation(self):
        with pytest.raises(ValueError):
            er_o(np.zeros((3, 3)), [0, 0, 1])

    def test_er_s(self):
        B = true_adjacency(example_model())
        assert er_s(B, B) == 0
        C = B.copy()
        C[3, 0] = 0
        assert er_s(B, C) == 1 / 16
        A = np.array([[0, 0], [1, 0]])
        assert er_s(A, np.array([[0, 1], [0, 0]])) == 0.5
        with pytest.raises(ValueError):
            er_s(A, B)

    def test_relabel_invariance(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            d = 5
            B = np.tril((rng.random((d, d)) < 0.5).astype(int), -1)
            B_hat = np.tril((rng.random((d, d)) < 0.5).astype(int), -1)
            order = list(rng.permutation(d))
            perm = rng.permutation(d)  # new label of old variable k is perm[k]
            inv = np.argsort(perm)
            B2 = B[np.ix_(inv, inv)]
            B_hat2 = B_hat[np.ix_(inv, inv)]
            order2 = [int(perm[v]) for v in order]
            assert er_o(B, order) == er_o(B2, order2)
            assert er_s(B, B_hat) == er_s(B2, B_hat2)


class TestRunTrials:
    def test_deterministic_report(self):
        c = GeneratorConfig(d=3, n=500, trials=15, seed=42)
        a = format_report(run_trials(c), timings=False)
        b = format_report(run_trials(c), timings=False)
        assert a == b

    def test_parallel_equals_serial(self):
        c = GeneratorConfig(d=3, n=500, trials=12, seed=3)
        serial = run_trials(c)
        parallel = run_trials(c, workers=2)
        assert format_report(serial, timings=False) == format_report(parallel, timings=False)

    def test_discarded_trials_never_scored(self):
        c = GeneratorConfig(d=4, n=200, trials=20, seed=1, max_retries=0)
        rep = run_trials(c)
        assert rep.trials_discarded > 0
        for t in rep.trials:
            assert t.discarded == (t.er_o != t.er_o)
        kept = [t.er_o for t in rep.trials if not t.discarded]
        assert rep.mean_er_o == pytest.approx(np.mean(kept))

    def test_rates_in_range(self):
        rep = run_trials(GeneratorConfig(d=4, n=1000, trials=20, seed=5))
        for t in rep.trials:
            assert 0 <= t.er_o <= 1 and 0 <= t.er_s <= 1

    def test_all_discarded_is_configuration_error(self):
        with pytest.raises(ConfigurationError):
            run_trials(GeneratorConfig(d=6, n=64, trials=3, max_retries=2))

    def test_report_layout(self):
        rep = run_trials(GeneratorConfig(d=2, n=200, trials=3, seed=0))
        text = format_report(rep)
        assert text.splitlines()[0] == "trial\ter_o\ter_s\tct_ms\tdiscarded"
        assert "# ER_o" in text and "# CT_ms" in text
        assert "ct_ms" not in format_report(rep, timings=False)

    def test_grid_shape_and_skips(self):
        base = GeneratorConfig(d=1, n=1, trials=5, seed=0)
        cells = benchmark_grid([2, 4, 8], [100, 1000], base)
        assert len(cells) == 6
        skipped = {(c.d, c.n) for c in cells if c.report is None}
        assert (8, 100) in skipped
        text = format_grid(cells, timings=False)
        assert text.splitlines()[0] == "n\\d\tmetric\t2\t4\t8"
        assert text.splitlines()[1].endswith("\t-")

    def test_unskewed_override(self):
        c = GeneratorConfig(d=2, n=200, trials=3, noise_probs=0.5, allow_unskewed=True,
                            discard_incomplete=False)
        rep = run_trials(c)
        assert rep.trials_discarded == 0


class TestYStructure:
    def test_model(self):
        m = y_structure_model((0.2, 0.3, 0.4, 0.6))
        assert true_adjacency(m).tolist() == [[0, 0, 0, 0], [0, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0]]
        m_or = y_structure_model((0.2, 0.3, 0.4, 0.6), use_or=True)
        assert m_or.functions[2] == (var(0) | var(1))

    def test_counts_totals(self):
        c = y_structure_experiment(n=2000, trials=5, seed=1)
        assert c.trials + c.discarded == 5
        assert c.directed_total == 3 * c.trials
        assert c.no_edge_total == 9 * c.trials
