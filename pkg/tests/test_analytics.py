import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnncompare.analytics import (
    AccuracyReport,
    DistanceMatrix,
    accuracy_report,
    build_distance_matrix,
    class_accuracy_stats,
    project_classes,
)
from cnncompare.errors import (
    EmptyClassError,
    InsufficientModelsError,
    ShapeMismatchError,
)
from cnncompare.hierarchy import ClassHierarchy
from oracles import accuracy_by_counting, distance_matrix_literal


def random_instance(rng, m=None, n=None, populate_all=True):
    n = n or rng.integers(2, 9)
    m = m or rng.integers(n if populate_all else 1, 51)
    if populate_all:
        classes = np.concatenate([np.arange(n), rng.integers(0, n, size=m - n)])
        rng.shuffle(classes)
    else:
        classes = rng.integers(0, n, size=m)
    conf = rng.random((m, n))
    conf /= conf.sum(axis=1, keepdims=True)
    return classes.astype(int), conf


class TestDistanceMatrix:
    def test_hand_derived_two_class_case(self):
        img_classes = [0, 0, 1, 1]
        conf = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.4, 0.6]])
        dist = build_distance_matrix(img_classes, conf)
        # pre-symmetrization: d01 = mean(0.9, 0.8) = 0.85, d10 = mean(0.7, 0.6) = 0.65
        assert dist.values[0, 1] == pytest.approx(0.75, abs=1e-12)
        assert dist.values[1, 0] == pytest.approx(0.75, abs=1e-12)
        assert dist.values[0, 0] == 0.0 and dist.values[1, 1] == 0.0

    def test_perfect_one_hot_classifier(self):
        classes = [0, 1, 2, 0, 1, 2]
        conf = np.eye(3)[classes]
        dist = build_distance_matrix(classes, conf)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(dist.values[off], 1.0)
        assert np.allclose(np.diag(dist.values), 0.0)

    def test_uniform_classifier(self):
        n = 4
        classes = [0, 1, 2, 3]
        conf = np.full((4, n), 1.0 / n)
        dist = build_distance_matrix(classes, conf)
        off = ~np.eye(n, dtype=bool)
        assert np.allclose(dist.values[off], 1.0 - 1.0 / n)

    def test_matches_literal_oracle_random(self):
        rng = np.random.default_rng(202)
        for _ in range(200):
            classes, conf = random_instance(rng)
            mine = build_distance_matrix(classes, conf)
            ref = distance_matrix_literal(classes, conf)
            ids = mine.class_ids
            assert ids == sorted(set(int(c) for c in classes))
            sub = ref[np.ix_(ids, ids)]
            assert np.max(np.abs(mine.values - sub)) < 1e-12

    def test_absent_classes_excluded(self):
        classes = [0, 0, 3]
        conf = np.array([[0.7, 0.1, 0.1, 0.1], [0.6, 0.2, 0.1, 0.1], [0.2, 0.2, 0.2, 0.4]])
        dist = build_distance_matrix(classes, conf)
        assert dist.class_ids == [0, 3]
        assert dist.values.shape == (2, 2)
        assert np.all(np.isfinite(dist.values))

    def test_no_images_raises(self):
        with pytest.raises(EmptyClassError):
            build_distance_matrix([], np.zeros((0, 4)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            build_distance_matrix([0, 1], np.zeros((3, 2)))
        with pytest.raises(ShapeMismatchError):
            build_distance_matrix([0, 5], np.full((2, 3), 1 / 3))

    @given(data=st.data())
    @settings(max_examples=150, deadline=None)
    def test_invariants_property(self, data):
        n = data.draw(st.integers(2, 8))
        m = data.draw(st.integers(n, 40))
        seed = data.draw(st.integers(0, 2**31 - 1))
        rng = np.random.default_rng(seed)
        classes, conf = random_instance(rng, m=m, n=n)
        dist = build_distance_matrix(classes, conf)
        v = dist.values
        assert np.array_equal(v, v.T)  # symmetry exact
        assert np.all(np.diag(v) == 0.0)
        assert v.min() >= 0.0 and v.max() <= 1.0


class TestProjection:
    def make_blocks(self, within=0.1, cross=0.9, block=5):
        n = 2 * block
        v = np.full((n, n), cross)
        v[:block, :block] = within
        v[block:, block:] = within
        np.fill_diagonal(v, 0.0)
        return DistanceMatrix(values=v, class_ids=list(range(n)), model_id="blocks")

    def test_equilateral_triangle_shape_preserved(self):
        v = np.full((3, 3), 0.5)
        np.fill_diagonal(v, 0.0)
        proj = project_classes(DistanceMatrix(values=v, class_ids=[0, 1, 2]))
        d = [
            np.linalg.norm(proj.coords[0] - proj.coords[1]),
            np.linalg.norm(proj.coords[1] - proj.coords[2]),
            np.linalg.norm(proj.coords[0] - proj.coords[2]),
        ]
        assert max(d) / min(d) < 1.2
        assert proj.degenerate  # all-equal distances are flagged

    def test_seeded_determinism(self):
        dist = self.make_blocks()
        a = project_classes(dist, seed=7)
        b = project_classes(dist, seed=7)
        assert np.array_equal(a.coords, b.coords)

    def test_block_separation_purity(self):
        dist = self.make_blocks()
        proj = project_classes(dist)
        coords = proj.coords
        labels = np.array([0] * 5 + [1] * 5)
        pure = 0
        for i in range(10):
            d = np.linalg.norm(coords - coords[i], axis=1)
            d[i] = np.inf
            pure += labels[int(np.argmin(d))] == labels[i]
        assert pure / 10 >= 0.9

    def test_root_index_from_hierarchy(self):
        hier = ClassHierarchy(
            leaf_labels=tuple(f"c{i}" for i in range(4)),
            root_of=(0, 0, 1, 1),
            root_labels=("a", "b"),
        )
        v = np.array([[0.0, 0.2, 0.8, 0.8], [0.2, 0.0, 0.8, 0.8],
                      [0.8, 0.8, 0.0, 0.2], [0.8, 0.8, 0.2, 0.0]])
        proj = project_classes(DistanceMatrix(values=v, class_ids=[0, 1, 2, 3]), hierarchy=hier)
        assert proj.root_index == [0, 0, 1, 1]


HIER3 = ClassHierarchy(
    leaf_labels=("a", "b", "c"),
    root_of=(0, 0, 1),
    root_labels=("first", "second"),
)


class TestAccuracyReport:
    def test_perfect_classifier(self):
        classes = [0, 1, 2, 1]
        conf = np.eye(3)[classes]
        rep = accuracy_report(classes, conf, HIER3)
        assert rep.overall == 1.0
        assert rep.per_leaf == [1.0, 1.0, 1.0]
        assert rep.per_root == [1.0, 1.0]

    def test_hand_case_argmax(self):
        classes = [0, 0, 1, 1]
        conf = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.4, 0.6]])
        hier = ClassHierarchy(("a", "b"), (0, 0), ("all",))
        rep = accuracy_report(classes, conf, hier)
        assert rep.per_leaf == [1.0, 1.0]
        assert rep.overall == 1.0

    def test_absent_class_marked_absent(self):
        classes = [0, 0]
        conf = np.array([[0.9, 0.05, 0.05], [0.8, 0.1, 0.1]])
        rep = accuracy_report(classes, conf, HIER3)
        assert rep.per_leaf[0] == 1.0
        assert rep.per_leaf[1] is None and rep.per_leaf[2] is None
        assert rep.per_root[1] is None

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(77)
        classes, conf = random_instance(rng, m=40, n=3)
        rep = accuracy_report(classes, conf, HIER3)
        ref = accuracy_by_counting(classes, conf)
        for c, acc in ref.items():
            assert rep.per_leaf[c] == pytest.approx(acc, abs=0)

    def test_overall_is_count_weighted_mean(self):
        rng = np.random.default_rng(78)
        classes, conf = random_instance(rng, m=50, n=3)
        rep = accuracy_report(classes, conf, HIER3)
        assert rep.overall == sum(rep.leaf_correct) / sum(rep.leaf_counts)

    def test_argmax_tie_breaks_low_index(self):
        classes = [1]
        conf = np.array([[0.5, 0.5]])
        hier = ClassHierarchy(("a", "b"), (0, 0), ("all",))
        rep = accuracy_report(classes, conf, hier)
        assert rep.per_leaf[1] == 0.0  # tie resolves to class 0, so class 1 misses


def make_report(per_leaf, model_id):
    counts = [10 if a is not None else 0 for a in per_leaf]
    correct = [int(round(a * 10)) if a is not None else 0 for a in per_leaf]
    total = sum(counts)
    return AccuracyReport(
        overall=sum(correct) / total,
        per_root=[None],
        per_leaf=per_leaf,
        leaf_counts=counts,
        leaf_correct=correct,
        model_id=model_id,
    )


class TestClassAccuracyStats:
    def test_identical_reports_tie_break(self):
        r = make_report([0.5, 0.6, 0.7, 0.8], "m1")
        r2 = make_report([0.5, 0.6, 0.7, 0.8], "m2")
        stats = class_accuracy_stats([r, r2], k=2)
        assert [e.class_id for e in stats.diverging] == [0, 1]
        assert all(e.spread == 0 for e in stats.diverging)

    def test_single_diverging_class_ranks_first(self):
        reports = [
            make_report([0.1, 0.5, 0.5], "m1"),
            make_report([0.5, 0.5, 0.5], "m2"),
            make_report([0.9, 0.5, 0.5], "m3"),
        ]
        stats = class_accuracy_stats(reports, k=1)
        assert stats.diverging[0].class_id == 0
        assert stats.diverging[0].spread == pytest.approx(0.8)

    def test_coherent_top_and_bottom(self):
        reports = [
            make_report([0.9, 0.2, 0.5], "m1"),
            make_report([1.0, 0.0, 0.5], "m2"),
        ]
        stats = class_accuracy_stats(reports, k=1)
        assert stats.coherent_top[0].class_id == 0
        assert stats.coherent_bottom[0].class_id == 1

    def test_only_jointly_populated_classes_ranked(self):
        reports = [
            make_report([0.9, None, 0.5], "m1"),
            make_report([1.0, 0.5, 0.5], "m2"),
        ]
        stats = class_accuracy_stats(reports, k=6)
        ranked = {e.class_id for e in stats.diverging}
        assert 1 not in ranked

    def test_insufficient_models(self):
        with pytest.raises(InsufficientModelsError):
            class_accuracy_stats([make_report([0.5], "m1")], k=1)

    def test_default_k_is_six(self):
        reports = [make_report([0.1 * i for i in range(9)], m) for m in ("a", "b")]
        stats = class_accuracy_stats(reports)
        assert len(stats.diverging) == 6
