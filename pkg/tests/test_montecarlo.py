import numpy as np
import pytest

from qeraser.errors import ConfigError, ContractViolation
from qeraser.ledger import max_normalized_deviation
from qeraser.montecarlo import (BasisSchedule, EventList, SamplerConfig, Selector,
                                coincidence_indices, coincidences, events_from_times, sample_pairs)
from qeraser.optics import eraser_pair, mark_paths
from qeraser.screen import ScreenGeometry, default_grid, pattern_conditional
from qeraser.state import (DIAGONAL, HV, ProjectorSpec, make_entangled_source, outcome_probability,
                           split_through_double_slit)

GEOM = ScreenGeometry()
X = default_grid(GEOM)


@pytest.fixture(scope="module")
def marked():
    return mark_paths(split_through_double_slit(make_entangled_source()), eraser_pair())


def small_cfg(**kw):
    base = dict(pair_count=20_000, rng_seed=11)
    base.update(kw)
    return SamplerConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        dict(pair_count=-1), dict(coincidence_window=0), dict(efficiency_a=1.5),
        dict(efficiency_b=-0.1), dict(pair_rate=0), dict(rng_seed=2**64),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SamplerConfig(**kw)

    def test_bad_schedule(self):
        with pytest.raises(ConfigError):
            BasisSchedule((), 1)
        with pytest.raises(ConfigError):
            BasisSchedule((HV,), 0)

    def test_cfg_type_checked(self, marked):
        with pytest.raises(ConfigError):
            sample_pairs(marked, GEOM, {"pair_count": 3})


class TestSampling:
    def test_zero_pairs(self, marked):
        a, b = sample_pairs(marked, GEOM, SamplerConfig(pair_count=0), X)
        assert len(a) == 0 and len(b) == 0

    def test_deterministic(self, marked):
        cfg = small_cfg()
        first = sample_pairs(marked, GEOM, cfg, X)
        second = sample_pairs(marked, GEOM, cfg, X)
        assert first[0] == second[0] and first[1] == second[1]
        other = sample_pairs(marked, GEOM, small_cfg(rng_seed=12), X)
        assert not (other[0] == first[0])

    def test_seeds_do_not_share_shard_streams(self, marked):
        # two shards each; neighbouring seeds must not reuse each other's streams
        n = 2 * 65536
        h = [np.bincount(sample_pairs(marked, GEOM, small_cfg(pair_count=n, rng_seed=s), X)[0].value,
                         minlength=X.size - 1) for s in (0, 1)]
        assert not np.array_equal(h[0], h[1])

    def test_worker_count_independent(self, marked):
        cfg = small_cfg(pair_count=200_000)
        one = sample_pairs(marked, GEOM, cfg, X)
        four = sample_pairs(marked, GEOM, cfg, X, workers=4)
        assert one[0] == four[0] and one[1] == four[1]

    def test_events_valid(self, marked):
        a, b = sample_pairs(marked, GEOM, small_cfg(), X)
        assert np.all(a.timestamp >= 0) and np.all(np.diff(a.timestamp) >= 0)
        assert np.all(np.diff(b.timestamp) >= 0)
        assert a.value.min() >= 0 and a.value.max() < X.size - 1
        assert set(np.unique(b.value)) <= {0, 1}
        ev = b[0]
        assert ev.detector == "pol_b" and ev.tag in (HV, DIAGONAL)
        assert a[0].tag is None

    def test_jitter_free_bijection(self, marked):
        cfg = small_cfg(jitter_sigma=0.0)
        a, b = sample_pairs(marked, GEOM, cfg, X)
        ij = coincidence_indices(a, b, cfg.coincidence_window)
        assert len(ij) == cfg.pair_count
        assert np.array_equal(a.pair[ij[:, 0]], b.pair[ij[:, 1]])

    def test_b_frequencies(self, marked):
        cfg = small_cfg(pair_count=100_000, b_basis_schedule=BasisSchedule((DIAGONAL,), 1))
        _, b = sample_pairs(marked, GEOM, cfg, X)
        p = outcome_probability(marked, ProjectorSpec("b", DIAGONAL, "first"))
        assert abs(np.mean(b.value == 0) - p) < 5 / np.sqrt(cfg.pair_count)

    def test_efficiency_coincidence_rate(self, marked):
        n, ea, eb = 100_000, 0.7, 0.4
        cfg = small_cfg(pair_count=n, efficiency_a=ea, efficiency_b=eb)
        a, b = sample_pairs(marked, GEOM, cfg, X)
        k = len(coincidence_indices(a, b, cfg.coincidence_window))
        p = ea * eb
        assert abs(k - n * p) < 5 * np.sqrt(n * p * (1 - p))

    def test_histogram_matches_conditional(self, marked):
        cfg = small_cfg(pair_count=200_000, b_basis_schedule=BasisSchedule.fixed(DIAGONAL))
        spec = ProjectorSpec("b", DIAGONAL, "first")
        a, _ = sample_pairs(marked, GEOM, cfg, X, condition=spec)
        counts = np.bincount(a.value, minlength=X.size - 1)
        probs = pattern_conditional(marked, spec, GEOM, X).bin_probabilities()
        assert max_normalized_deviation(counts, probs) < 5

    def test_condition_is_subset_of_full_run(self, marked):
        cfg = small_cfg()
        a, b = sample_pairs(marked, GEOM, cfg, X)
        ca, cb = sample_pairs(marked, GEOM, cfg, X, condition="-45")
        keep = np.isin(a.pair, cb.pair)
        assert np.array_equal(a.timestamp[keep], ca.timestamp)
        assert np.array_equal(a.value[keep], ca.value)
        assert np.all(cb.value == 1) and np.all(np.array(cb.bases)[cb.tag] == DIAGONAL)

    def test_csv_round_trip(self, marked, tmp_path):
        a, b = sample_pairs(marked, GEOM, small_cfg(pair_count=500), X)
        for ev, name in ((a, "a.csv"), (b, "b.csv")):
            ev.to_csv(tmp_path / name)
            lines = (tmp_path / name).read_text(encoding="utf-8").splitlines()
            assert lines[0] == "timestamp_s,detector,value,tag"
            back = EventList.from_csv(tmp_path / name)
            assert np.array_equal(back.timestamp, ev.timestamp)
            assert [e.value for e in back] == [e.value for e in ev]
            assert [e.tag for e in back] == [e.tag for e in ev]


class TestCoincidences:
    def test_within_window(self):
        pairs = coincidences(events_from_times([0.0]), events_from_times([0.4e-9], "pol_b"), 1e-9)
        assert len(pairs) == 1

    def test_outside_window(self):
        assert coincidences(events_from_times([0.0]), events_from_times([2e-9], "pol_b"), 1e-9) == []

    def test_unsorted(self):
        with pytest.raises(ContractViolation):
            coincidences(events_from_times([1.0, 0.0]), events_from_times([0.0]), 1e-9)

    def test_each_event_used_once(self):
        a = events_from_times([0.0, 0.1e-9])
        b = events_from_times([0.05e-9], "pol_b")
        ij = coincidence_indices(a, b, 1e-9)
        assert ij.tolist() == [[0, 0]]

    def test_symmetric(self):
        rng = np.random.default_rng(5)
        ta = np.sort(rng.uniform(0, 1e-6, 400))
        tb = np.sort(rng.uniform(0, 1e-6, 400))
        a, b = events_from_times(ta), events_from_times(tb)
        ab = {(i, j) for i, j in coincidence_indices(a, b, 1e-9).tolist()}
        ba = {(i, j) for j, i in coincidence_indices(b, a, 1e-9).tolist()}
        assert ab == ba and len(ab) > 0

    def test_output_sorted(self):
        rng = np.random.default_rng(6)
        a = events_from_times(np.sort(rng.uniform(0, 1e-6, 300)))
        b = events_from_times(np.sort(rng.uniform(0, 1e-6, 300)))
        times = [min(x.timestamp, y.timestamp) for x, y in coincidences(a, b, 2e-9)]
        assert times == sorted(times)


def test_selector_parse():
    assert Selector.parse("all") == Selector()
    assert Selector.parse("+45") == Selector(DIAGONAL, "first")
    assert Selector.parse("V") == Selector(HV, "second")
    assert Selector.parse("DIAG") == Selector(DIAGONAL)
    assert Selector.parse("R").label == "R"
    with pytest.raises(ValueError):
        Selector.parse("sideways")
