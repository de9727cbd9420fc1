import math

import numpy as np
import pytest

from hedonic.errors import DataError
from hedonic.estimate import fit_ols
from hedonic.formula import parse_model_spec, build_design
from hedonic.segment import (
    MIN_EXTRA_ROWS,
    SegmentNode,
    chow,
    compare_levels,
    fit_segment,
    fit_segments,
    merge_segments,
    nest,
    pairwise_segmentation_test,
    price_summary,
    stratify,
)
from hedonic.synth import MarketConfig, Pcg32, generate_market
from hedonic.tabular import Dataset, categorical_column

from helpers import design_from_arrays, make_dataset, ssr_bruteforce

SPEC = parse_model_spec("response: ln(Price)\nterms: ln(Size), Age")


def _market(seed, betas, n_per=60, noise=0.1, labels=None):
    labels = labels or [f"s{i}" for i in range(len(betas))]
    cfg = MarketConfig.from_dict(
        {
            "seed": seed,
            "model": "response: ln(Price)\nterms: ln(Size), Age",
            "segment_column": "Seg",
            "columns": [
                {"name": "Size", "kind": "loguniform", "low": 600, "high": 6000},
                {"name": "Age", "kind": "uniform", "low": 1, "high": 90},
            ],
            "segments": [
                {"label": lab, "n": n_per, "coefficients": list(b), "noise_sd": noise}
                for lab, b in zip(labels, betas)
            ],
        }
    )
    ds, truth = generate_market(cfg)
    return ds, truth


class TestStratify:
    def test_single_level_rejected(self):
        ds = make_dataset(g=["a", "a", "a"])
        with pytest.raises(DataError, match="fewer than 2"):
            stratify(ds, "g")

    def test_property_type_frequencies(self):
        # structural mix: 604 / 90 / 324 by type
        labels = ["single"] * 604 + ["town"] * 90 + ["condo"] * 324
        ds = Dataset(
            {"t": categorical_column(labels, levels=("condo", "town", "single"))}
        )
        nodes = stratify(ds, "t")
        assert [(n.label, n.n) for n in nodes] == [
            ("condo", 324),
            ("town", 90),
            ("single", 604),
        ]

    def test_region_frequencies(self):
        sizes = {
            "central": 230,
            "north": 238,
            "south": 143,
            "east": 200,
            "gunbarrel": 125,
            "rural": 82,
        }
        labels = [lab for lab, n in sizes.items() for _ in range(n)]
        ds = Dataset({"r": categorical_column(labels, levels=tuple(sizes))})
        nodes = stratify(ds, "r")
        assert {n.label: n.n for n in nodes} == sizes
        assert sum(n.n for n in nodes) == 1018

    def test_rows_partition(self):
        ds = make_dataset(g=["a", "b", "a", "b"])
        nodes = stratify(ds, "g")
        rows = sorted(i for n in nodes for i in n.rows)
        assert rows == [0, 1, 2, 3]

    def test_missing_cells_rejected(self):
        ds = Dataset({"g": categorical_column(["a", None, "b"])})
        with pytest.raises(DataError, match="missing"):
            stratify(ds, "g")

    def test_numeric_column_rejected(self):
        ds = make_dataset(g=[1, 2])
        with pytest.raises(DataError, match="not categorical"):
            stratify(ds, "g")


def _fit_xy(X, y):
    return fit_ols(design_from_arrays(X, y))


class TestChow:
    def test_identical_copy_gives_zero(self):
        rng = Pcg32(6)
        n = 20
        x = np.array([rng.uniform() * 5 for _ in range(n)])
        y = 1.0 + 2.0 * x + np.array([rng.normal() * 0.3 for _ in range(n)])
        X = np.column_stack([np.ones(n), x])
        fit_a = _fit_xy(X, y)
        fit_b = _fit_xy(X.copy(), y.copy())
        pooled = _fit_xy(np.vstack([X, X]), np.concatenate([y, y]))
        result = chow(pooled, fit_a, fit_b, "a", "b")
        assert result.f_stat == pytest.approx(0.0, abs=1e-9)
        assert result.p_value == pytest.approx(1.0, abs=1e-9)

    def test_tiny_instance_matches_bruteforce(self):
        # n_a = n_b = 5, k = 2; all three SSRs recomputed via the
        # normal-equation oracle
        xa = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        ya = np.array([1.1, 1.9, 3.2, 3.8, 5.1])
        xb = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        yb = np.array([3.0, 4.8, 7.1, 9.2, 10.9])
        Xa = np.column_stack([np.ones(5), xa])
        Xb = np.column_stack([np.ones(5), xb])
        Xp = np.vstack([Xa, Xb])
        yp = np.concatenate([ya, yb])
        result = chow(_fit_xy(Xp, yp), _fit_xy(Xa, ya), _fit_xy(Xb, yb))
        ssr_p = ssr_bruteforce(Xp, yp)
        ssr_a = ssr_bruteforce(Xa, ya)
        ssr_b = ssr_bruteforce(Xb, yb)
        k = 2
        expected = ((ssr_p - ssr_a - ssr_b) / k) / ((ssr_a + ssr_b) / (10 - 2 * k))
        assert result.f_stat == pytest.approx(expected, rel=1e-10)
        assert result.df1 == 2 and result.df2 == 6

    def test_symmetry(self):
        rng = Pcg32(14)
        n = 15
        X = np.column_stack([np.ones(n), [rng.uniform() for _ in range(n)]])
        ya = np.array([rng.normal() for _ in range(n)])
        yb = np.array([rng.normal() + 1.0 for _ in range(n)])
        pooled = _fit_xy(np.vstack([X, X]), np.concatenate([ya, yb]))
        ab = chow(pooled, _fit_xy(X, ya), _fit_xy(X, yb))
        ba = chow(pooled, _fit_xy(X, yb), _fit_xy(X, ya))
        assert ab.f_stat == pytest.approx(ba.f_stat, rel=1e-12)

    def test_regressor_mismatch_rejected(self):
        n = 12
        X2 = np.column_stack([np.ones(n), np.arange(n, dtype=float)])
        X3 = np.column_stack([X2, np.arange(n, dtype=float) ** 2])
        y = np.linspace(0.0, 2.0, n)
        with pytest.raises(DataError, match="regressor sets differ"):
            chow(_fit_xy(np.vstack([X2, X2]), np.concatenate([y, y])), _fit_xy(X2, y), _fit_xy(X3, y))

    def test_pooled_row_count_checked(self):
        n = 12
        X = np.column_stack([np.ones(n), np.arange(n, dtype=float)])
        y = np.linspace(0.0, 2.0, n)
        fit = _fit_xy(X, y)
        with pytest.raises(DataError, match="union"):
            chow(fit, fit, fit)

    def test_star_thresholds_at_realistic_df(self):
        # the table convention: 4.79 on large df earns ***, 1.25 none
        from hedonic.dist import f_sf

        assert f_sf(4.79, 25, 800) < 0.01
        assert f_sf(1.25, 25, 300) > 0.1


class TestPairwise:
    def test_all_pairs_tested(self):
        ds, _ = _market(42, [(12.0, 0.6, -0.004)] * 6, n_per=40)
        nodes = stratify(ds, "Seg")
        result = pairwise_segmentation_test(ds, nodes, SPEC)
        assert len(result.results) == 15  # 6 choose 2
        assert result.failures == ()

    def test_unfittable_segment_reported_not_fatal(self):
        ds, _ = _market(43, [(12.0, 0.6, -0.004)] * 2, n_per=40)
        tiny = SegmentNode(label="tiny", rows=(0, 1, 2))
        nodes = stratify(ds, "Seg") + [tiny]
        result = pairwise_segmentation_test(ds, nodes, SPEC)
        assert len(result.results) == 1
        assert len(result.failures) == 2
        assert all("tiny" in (a, b) for a, b, _ in result.failures)


class TestMerge:
    def test_all_significant_unchanged(self):
        ds, _ = _market(
            7,
            [(12.0, 0.6, -0.004), (10.0, 1.2, 0.01), (14.0, 0.2, -0.02)],
            n_per=80,
        )
        nodes = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        merged, _ = merge_segments(ds, nodes, SPEC, alpha=0.05)
        assert [n.label for n in merged] == ["s0", "s1", "s2"]

    def test_identical_pair_merges_into_joined_label(self):
        ds, _ = _market(
            19,
            [(12.0, 0.6, -0.004), (12.0, 0.6, -0.004), (10.0, 1.3, 0.015)],
            n_per=100,
        )
        nodes = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        merged, tests = merge_segments(ds, nodes, SPEC, alpha=0.05)
        labels = sorted(n.label for n in merged)
        assert labels == ["s0-s1", "s2"]
        joined = next(n for n in merged if n.label == "s0-s1")
        assert joined.n == 200
        assert joined.fitted
        assert all(r.p_value <= 0.05 for r in tests.results)

    def test_three_sharing_beta_collapse_to_one(self):
        ds, _ = _market(
            101,
            [
                (12.0, 0.6, -0.004),
                (12.0, 0.6, -0.004),
                (12.0, 0.6, -0.004),
                (9.0, 1.5, 0.02),
            ],
            n_per=90,
        )
        nodes = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        merged, _ = merge_segments(ds, nodes, SPEC, alpha=0.05)
        sizes = sorted(n.n for n in merged)
        assert len(merged) == 2
        assert sizes == [90, 270]


class TestNest:
    def test_single_parent_single_level_child_equals_parent(self):
        ds, _ = _market(55, [(12.0, 0.6, -0.004)] * 2, n_per=40)
        ptype = categorical_column(["house"] * ds.n_rows, levels=("house",))
        ds = ds.with_column("Type", ptype)
        parents = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        root = nest(ds, parents, "Type", SPEC)
        for parent in root.children:
            assert len(parent.children) == 1
            child = parent.children[0]
            assert child.rows == parent.rows
            assert child.label == f"{parent.label}-house"

    def test_partition_invariant_every_level(self):
        rng = Pcg32(60)
        ds, _ = _market(60, [(12.0, 0.6, -0.004)] * 3, n_per=50)
        types = ["condo" if rng.uniform() < 0.5 else "house" for _ in range(ds.n_rows)]
        ds = ds.with_column("Type", categorical_column(types, levels=("condo", "house")))
        parents = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        root = nest(ds, parents, "Type", SPEC)
        assert sum(p.n for p in root.children) == root.n
        for parent in root.children:
            assert sum(c.n for c in parent.children) == parent.n
            assert sorted(i for c in parent.children for i in c.rows) == sorted(parent.rows)

    def test_empty_combination_noted(self):
        ds, _ = _market(61, [(12.0, 0.6, -0.004)] * 2, n_per=40)
        types = ["condo"] * 40 + ["house"] * 40  # s1 has no condo rows
        ds = ds.with_column("Type", categorical_column(types, levels=("condo", "house")))
        parents = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        root = nest(ds, parents, "Type", SPEC)
        s0, s1 = root.children
        assert len(s0.children) == 1 and len(s1.children) == 1
        assert "no rows for Type" in s0.note and "house" in s0.note
        assert "condo" in s1.note

    def test_too_small_child_left_unfitted(self):
        ds, _ = _market(62, [(12.0, 0.6, -0.004)] * 2, n_per=40)
        types = (["condo"] * 5 + ["house"] * 35) * 2
        ds = ds.with_column("Type", categorical_column(types, levels=("condo", "house")))
        parents = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        root = nest(ds, parents, "Type", SPEC)
        for parent in root.children:
            condo = next(c for c in parent.children if c.label.endswith("condo"))
            assert not condo.fitted
            assert "unfitted" in condo.note
            house = next(c for c in parent.children if c.label.endswith("house"))
            assert house.fitted

    def test_six_nested_children_give_15_pairs(self):
        rng = Pcg32(63)
        ds, _ = _market(63, [(12.0, 0.6, -0.004)] * 3, n_per=80)
        types = ["condo" if rng.uniform() < 0.5 else "house" for _ in range(ds.n_rows)]
        ds = ds.with_column("Type", categorical_column(types, levels=("condo", "house")))
        parents = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        root = nest(ds, parents, "Type", SPEC)
        children = [c for p in root.children for c in p.children]
        assert len(children) == 6
        result = pairwise_segmentation_test(ds, children, SPEC)
        assert len(result.results) + len(result.failures) == 15


class TestCompare:
    def test_single_node_metrics_verbatim(self):
        ds, _ = _market(70, [(12.0, 0.6, -0.004)] * 2, n_per=50)
        nodes = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        rows = compare_levels(ds, [nodes[0]])
        row = rows[0]
        fit = nodes[0].fit
        assert row.r2 == fit.r2
        assert row.adj_r2 == fit.adj_r2
        assert row.mse == pytest.approx(fit.ssr / fit.n, rel=1e-15)

    def test_submarket_mse_beats_pooled_under_real_segmentation(self):
        ds, _ = _market(
            71, [(12.0, 0.6, -0.004), (9.5, 1.4, 0.015)], n_per=120
        )
        dm = build_design(ds, SPEC)
        pooled_fit = fit_ols(dm)
        aggregate = SegmentNode("aggregate", tuple(range(ds.n_rows)), SPEC, pooled_fit)
        nodes = fit_segments(ds, stratify(ds, "Seg"), SPEC)
        rows = compare_levels(ds, nodes, aggregate)
        pooled_mse = rows[0].mse
        assert all(r.mse < pooled_mse for r in rows[1:])

    def test_unfitted_node_row_carries_note(self):
        ds, _ = _market(72, [(12.0, 0.6, -0.004)] * 2, n_per=40)
        tiny = SegmentNode(label="tiny", rows=(0, 1, 2))
        tiny = fit_segment(ds, tiny, SPEC)
        rows = compare_levels(ds, [tiny])
        assert rows[0].r2 is None
        assert "unfitted" in rows[0].note

    def test_price_summary_layout(self):
        ds, _ = _market(73, [(12.0, 0.6, -0.004)] * 2, n_per=30)
        nodes = stratify(ds, "Seg")
        rows = price_summary(ds, nodes, "Price")
        assert [r.label for r in rows] == ["s0", "s1"]
        prices = [v for v in ds.column("Price").values[:30]]
        assert rows[0].mean == pytest.approx(sum(prices) / 30)
        assert rows[0].minimum == min(prices) and rows[0].maximum == max(prices)
        sd = math.sqrt(sum((v - rows[0].mean) ** 2 for v in prices) / 29)
        assert rows[0].sd == pytest.approx(sd)


class TestMinimumSize:
    def test_threshold_is_k_plus_10(self):
        ds, _ = _market(80, [(12.0, 0.6, -0.004)], n_per=30)
        node = SegmentNode("all", tuple(range(12)))
        fitted = fit_segment(ds, node, SPEC)  # k = 3 -> needs 13
        assert not fitted.fitted
        assert f"k + {MIN_EXTRA_ROWS}" in fitted.note
        node13 = SegmentNode("all", tuple(range(13)))
        assert fit_segment(ds, node13, SPEC).fitted
