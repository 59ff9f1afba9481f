import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svmf import reference_catalog, toy_catalog
from svmf.detection import DetectionSet, dump_detections
from svmf.fingerprint import compute_svmf
from svmf.graph import build_graph
from svmf.synth import (
    IDENTITY,
    REFERENCE_LEVELS,
    PerturbationParams,
    SynthError,
    SynthSpec,
    build_benchmark,
    evaluate_benchmark,
    generate_base,
    load_bundle,
    perturb,
    write_bundle,
)

POOL = tuple(range(12))


class TestGenerateBase:
    def test_single_instance(self):
        s = generate_base(SynthSpec(count_range=(1, 1), class_pool=POOL), 3)
        assert len(s.instances) == 1

    def test_deterministic_bytes(self):
        spec = SynthSpec(class_pool=POOL)
        assert dump_detections([generate_base(spec, 42)]) == dump_detections([generate_base(spec, 42)])

    def test_seed_matters(self):
        spec = SynthSpec(class_pool=POOL)
        assert generate_base(spec, 1) != generate_base(spec, 2)

    @pytest.mark.parametrize("seed", range(25))
    def test_dense_small_canvas_connected(self, seed):
        spec = SynthSpec(count_range=(5, 5), class_pool=POOL, canvas=(120, 120), mean_box_size=30, overlap_density=1.0)
        g = build_graph(generate_base(spec, seed))
        assert len(g.nodes) == 5 and g.is_connected()

    def test_boxes_inside_canvas(self):
        spec = SynthSpec(count_range=(20, 20), class_pool=POOL, canvas=(300, 200))
        for inst in generate_base(spec, 9).instances:
            b = inst.box
            assert 0 <= b.x_min <= b.x_max <= 300 and 0 <= b.y_min <= b.y_max <= 200

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"count_range": (0, 3)},
            {"count_range": (4, 3)},
            {"class_pool": ()},
            {"canvas": (40, 40), "mean_box_size": 40},
            {"overlap_density": 1.5},
        ],
    )
    def test_infeasible(self, kwargs):
        with pytest.raises(SynthError):
            SynthSpec(**{"class_pool": POOL, **kwargs})


BASE = generate_base(SynthSpec(count_range=(8, 8), class_pool=POOL), 5)


class TestPerturb:
    def test_identity(self):
        assert perturb(BASE, IDENTITY) == BASE

    def test_drop_all_keeps_last(self):
        three = DetectionSet("t", BASE.instances[:3])
        out = perturb(three, PerturbationParams(drop_prob=1.0, seed=1))
        assert out.instances == (three.instances[-1],)

    def test_deterministic(self):
        p = PerturbationParams(0.3, 0.3, 0.2, seed=77)
        assert perturb(BASE, p, POOL) == perturb(BASE, p, POOL)

    def test_substitution_changes_class(self):
        out = perturb(BASE, PerturbationParams(substitute_prob=1.0, seed=3), POOL)
        assert all(a.class_id != b.class_id for a, b in zip(BASE.instances, out.instances))
        assert all(b.class_id in POOL for b in out.instances)

    def test_jitter_keeps_boxes_valid(self):
        out = perturb(BASE, PerturbationParams(jitter_frac=2.0, seed=3))
        assert all(not i.box.empty for i in out.instances)
        assert out.instances != BASE.instances

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            PerturbationParams(drop_prob=1.2)
        with pytest.raises(ValueError):
            PerturbationParams(jitter_frac=-0.1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0, 1), st.floats(0, 1))
    def test_stronger_drop_drops_superset(self, seed, p1, p2):
        lo, hi = sorted((p1, p2))
        kept_lo = {i.instance_id for i in perturb(BASE, PerturbationParams(drop_prob=lo, seed=seed)).instances}
        kept_hi = {i.instance_id for i in perturb(BASE, PerturbationParams(drop_prob=hi, seed=seed)).instances}
        assert kept_hi <= kept_lo or len(kept_hi) == 1

    def test_reference_levels_are_ordered(self):
        for weak, strong in zip(REFERENCE_LEVELS, REFERENCE_LEVELS[1:]):
            assert strong.dominates(weak)


class TestBenchmark:
    def test_identity_single_variant(self, toy12):
        bench = build_benchmark(1, 1, [IDENTITY], 0, toy12, SynthSpec(class_pool=POOL))
        (report,) = evaluate_benchmark(bench, toy12)
        assert report["index_size"] == 1 and report["ranks"] == [1]

    def test_query_is_base_fingerprint(self, toy12):
        bench = build_benchmark(2, 3, [IDENTITY], 4, toy12, SynthSpec(class_pool=POOL))
        for (key, q), sets in zip(bench.queries, [bench.levels[0][:3], bench.levels[0][3:]]):
            for s in sets:
                assert compute_svmf(build_graph(s), toy12) == q

    def test_counts(self, toy12):
        bench = build_benchmark(4, 3, REFERENCE_LEVELS, 1, toy12, SynthSpec(class_pool=POOL))
        assert len(bench.queries) == 4
        assert [len(sets) for sets in bench.levels] == [12, 12, 12]

    def test_deterministic_bundle(self, toy12, tmp_path):
        spec = SynthSpec(class_pool=POOL)
        a = write_bundle(build_benchmark(3, 2, REFERENCE_LEVELS, 11, toy12, spec), tmp_path / "a")
        b = write_bundle(build_benchmark(3, 2, REFERENCE_LEVELS, 11, toy12, spec), tmp_path / "b")
        files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        for f in files:
            assert (a / f).read_bytes() == (b / f).read_bytes()

    def test_bundle_round_trip(self, toy12, tmp_path):
        bench = build_benchmark(3, 2, REFERENCE_LEVELS, 11, toy12, SynthSpec(class_pool=POOL))
        loaded = load_bundle(write_bundle(bench, tmp_path / "b"), toy12)
        assert loaded.queries == bench.queries
        assert loaded.levels == bench.levels
        assert loaded.manifest["generator"].startswith("numpy.random.PCG64")
        assert evaluate_benchmark(loaded, toy12) == evaluate_benchmark(bench, toy12)

    def test_unknown_pool_class(self):
        with pytest.raises(SynthError):
            build_benchmark(1, 1, [IDENTITY], 0, toy_catalog("FC"), SynthSpec(class_pool=(0, 5)))

    def test_reference_catalog_default_spec(self):
        cat = reference_catalog()
        bench = build_benchmark(2, 1, [IDENTITY], 0, cat)
        assert all(fp.n == 1561 for _, fp in bench.queries)
