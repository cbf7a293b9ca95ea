"""Photon-pair event sampling and coincidence pairing.

Random numbers come from numpy's Philox counter-based generator. Pairs are
generated in fixed-size shards; shard ``k`` uses the 128-bit key ``(k << 64) | seed``,
so the output does not depend on how many workers generate the shards.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, ContractViolation
from .screen import ScreenGeometry, default_grid, pattern_conditional
from .state import (CIRCULAR, DIAGONAL, HV, OUTCOMES, PolarizationBasis, ProjectorSpec,
                    TwoPhotonState, outcome_probability)

__all__ = [
    "BasisSchedule",
    "SamplerConfig",
    "DetectionEvent",
    "EventList",
    "sample_pairs",
    "coincidences",
    "coincidence_indices",
    "SCREEN_A",
    "POL_B",
    "events_from_times",
    "Selector",
]

SCREEN_A = "screen_a"
POL_B = "pol_b"
SHARD_SIZE = 1 << 16
JITTER_CUT = 4.0


@dataclass(frozen=True)
class BasisSchedule:
    """Rule choosing photon *b*'s analyzer basis for each pair.

    ``mode="blocks"`` cycles through ``bases`` in blocks of ``block`` pairs;
    ``mode="random"`` draws a basis uniformly per pair from the pair's shard
    stream.
    """

    bases: tuple[PolarizationBasis, ...] = (HV, DIAGONAL)
    block: int = 1024
    mode: str = "blocks"

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        if not self.bases:
            raise ConfigError("schedule needs at least one basis")
        if self.block < 1:
            raise ConfigError("schedule block must be >= 1")
        if self.mode not in ("blocks", "random"):
            raise ConfigError(f"unknown schedule mode {self.mode!r}")

    @classmethod
    def fixed(cls, basis: PolarizationBasis) -> BasisSchedule:
        return cls((basis,), 1, "blocks")

    def assign(self, pair_index: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.mode == "random":
            return rng.integers(0, len(self.bases), size=pair_index.size)
        return (pair_index // self.block) % len(self.bases)


@dataclass(frozen=True)
class SamplerConfig:
    pair_count: int = 10_000
    pair_rate: float = 1e4
    coincidence_window: float = 1e-9
    b_basis_schedule: BasisSchedule = field(default_factory=BasisSchedule)
    rng_seed: int = 0
    efficiency_a: float = 1.0
    efficiency_b: float = 1.0
    jitter_sigma: float = 100e-12

    def __post_init__(self):
        if int(self.pair_count) != self.pair_count or self.pair_count < 0:
            raise ConfigError("pair_count must be a non-negative integer")
        if not self.pair_rate > 0:
            raise ConfigError("pair_rate must be positive")
        if not self.coincidence_window > 0:
            raise ConfigError("coincidence_window must be positive")
        for name in ("efficiency_a", "efficiency_b"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.jitter_sigma < 0:
            raise ConfigError("jitter_sigma must be non-negative")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")


class Selector(NamedTuple):
    """Subset of *b* results: a basis and outcome, either of which may be ``None`` (any).

    Parsed from text by :meth:`parse`: ``all``; a basis label (``HV``,
    ``DIAG``, ``CIRC``); or an outcome label (``H``, ``V``, ``+45``, ``-45``,
    ``R``, ``L``).
    """

    basis: PolarizationBasis | None = None
    outcome: str | None = None

    @classmethod
    def parse(cls, text) -> Selector:
        if isinstance(text, Selector):
            return text
        if isinstance(text, ProjectorSpec):
            return cls(text.basis, text.outcome)
        text = str(text).strip()
        if text.lower() == "all":
            return cls()
        for basis in (HV, DIAGONAL, CIRCULAR):
            if text == basis.label:
                return cls(basis)
            for o in OUTCOMES:
                if text == basis.outcome_label(o):
                    return cls(basis, o)
        try:
            return cls(PolarizationBasis.from_label(text))
        except ValueError:
            raise ValueError(f"unknown selector {text!r}") from None

    @property
    def label(self) -> str:
        if self.basis is None:
            return "all"
        if self.outcome is None:
            return self.basis.label
        return self.basis.outcome_label(self.outcome)

    def mask(self, basis_index: np.ndarray, outcome_index: np.ndarray, bases) -> np.ndarray:
        sel = np.ones(basis_index.shape, dtype=bool)
        if self.basis is not None:
            k = bases.index(self.basis) if self.basis in bases else -2
            sel &= basis_index == k
        if self.outcome is not None:
            sel &= outcome_index == OUTCOMES.index(self.outcome)
        return sel


class DetectionEvent(NamedTuple):
    timestamp: float
    detector: str
    value: int
    tag: PolarizationBasis | None


@dataclass(frozen=True, eq=False)
class EventList:
    """Time-sorted detections of one detector, stored column-wise.

    ``value`` is the screen bin for ``screen_a`` and the outcome index
    (0 first, 1 second) for ``pol_b``; ``tag`` indexes ``bases`` (-1 for
    none). ``pair`` is the generating pair index, kept for diagnostics; it is
    not written to CSV and not used for pairing.
    """

    detector: str
    timestamp: np.ndarray
    value: np.ndarray
    tag: np.ndarray
    pair: np.ndarray
    bases: tuple[PolarizationBasis, ...] = ()

    def __post_init__(self):
        for name in ("timestamp", "value", "tag", "pair"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return int(self.timestamp.size)

    def __getitem__(self, i) -> DetectionEvent:
        t = int(self.tag[i])
        return DetectionEvent(float(self.timestamp[i]), self.detector, int(self.value[i]),
                              self.bases[t] if t >= 0 else None)

    def __iter__(self) -> Iterator[DetectionEvent]:
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, EventList):
            return NotImplemented
        return (self.detector == other.detector and self.bases == other.bases
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ("timestamp", "value", "tag", "pair")))

    def value_label(self, i: int) -> str:
        if self.detector == SCREEN_A:
            return str(int(self.value[i]))
        return self.bases[int(self.tag[i])].outcome_label(OUTCOMES[int(self.value[i])])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("timestamp_s,detector,value,tag\n")
            for i in range(len(self)):
                t = int(self.tag[i])
                tag = self.bases[t].label if t >= 0 else ""
                fh.write(f"{self.timestamp[i]:.17g},{self.detector},{self.value_label(i)},{tag}\n")

    @classmethod
    def from_csv(cls, path) -> EventList:
        times, values, tags, bases = [], [], [], []
        detector = None
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                detector = row["detector"]
                times.append(float(row["timestamp_s"]))
                if not row["tag"]:
                    tags.append(-1)
                    values.append(int(row["value"]))
                    continue
                basis = PolarizationBasis.from_label(row["tag"])
                if basis not in bases:
                    bases.append(basis)
                tags.append(bases.index(basis))
                labels = [basis.outcome_label(o) for o in OUTCOMES]
                values.append(labels.index(row["value"]))
        n = len(times)
        return cls(detector or SCREEN_A, np.array(times, dtype=float), np.array(values, dtype=np.int64),
                   np.array(tags, dtype=np.int64), np.full(n, -1, dtype=np.int64), tuple(bases))


def _empty(detector: str, bases) -> EventList:
    z = np.zeros(0, dtype=np.int64)
    return EventList(detector, np.zeros(0), z, z, z, tuple(bases))


def _truncated_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    lo, hi = ndtr(-JITTER_CUT), ndtr(JITTER_CUT)
    return ndtri(lo + (hi - lo) * rng.random(size))


def _conditional_tables(state: TwoPhotonState, geom: ScreenGeometry, x_grid: np.ndarray,
                        bases) -> tuple[np.ndarray, np.ndarray]:
    # p_first[k] and bin CDFs cdf[k, o] for basis k, outcome o
    p_first = np.zeros(len(bases))
    cdfs = np.zeros((len(bases), 2, x_grid.size))
    for k, basis in enumerate(bases):
        for j, o in enumerate(OUTCOMES):
            spec = ProjectorSpec("b", basis, o)
            p = outcome_probability(state, spec)
            if j == 0:
                p_first[k] = p
            if p < 1e-15:
                continue
            probs = pattern_conditional(state, spec, geom, x_grid).bin_probabilities()
            cdfs[k, j, 1:] = np.cumsum(probs)
            cdfs[k, j, -1] = 1.0
    return p_first, cdfs


def _sample_shard(shard: int, start: int, stop: int, cfg: SamplerConfig,
                  p_first: np.ndarray, cdfs: np.ndarray) -> dict[str, np.ndarray]:
    # 128-bit key: seed in the low word, shard in the high word
    rng = np.random.Generator(np.random.Philox(key=(shard << 64) | int(cfg.rng_seed)))
    n = stop - start
    idx = np.arange(start, stop, dtype=np.int64)
    gaps = rng.exponential(1.0 / cfg.pair_rate, n)
    basis = cfg.b_basis_schedule.assign(idx, rng)
    outcome = (rng.random(n) >= p_first[basis]).astype(np.int64)
    u = rng.random(n)
    a_bin = np.empty(n, dtype=np.int64)
    nbins = cdfs.shape[2] - 1
    for k in range(cdfs.shape[0]):
        for j in (0, 1):
            sel = (basis == k) & (outcome == j)
            if np.any(sel):
                # inverse of the piecewise-linear bin CDF; only the bin is kept
                a_bin[sel] = np.searchsorted(cdfs[k, j], u[sel], side="right") - 1
    np.clip(a_bin, 0, nbins - 1, out=a_bin)
    jitter_a = _truncated_normal(rng, n) * cfg.jitter_sigma
    jitter_b = _truncated_normal(rng, n) * cfg.jitter_sigma
    keep_a = rng.random(n) < cfg.efficiency_a
    keep_b = rng.random(n) < cfg.efficiency_b
    return dict(idx=idx, gaps=gaps, basis=basis, outcome=outcome, a_bin=a_bin,
                jitter_a=jitter_a, jitter_b=jitter_b, keep_a=keep_a, keep_b=keep_b)


def sample_pairs(state: TwoPhotonState, geom: ScreenGeometry, cfg: SamplerConfig,
                 x_grid=None, *, condition=None,
                 workers: int = 1) -> tuple[EventList, EventList]:
    """Draw detection events for ``cfg.pair_count`` photon pairs.

    For every pair the schedule fixes *b*'s basis, *b*'s outcome is drawn
    from its marginal and *a*'s screen bin from the matching conditional
    pattern (inverse CDF on the grid intervals). Both detections share an
    exponential-arrival emission time plus independent truncated-Gaussian
    jitter, and each is kept with its detector efficiency.

    ``condition`` (a :class:`Selector`, its text form or a ProjectorSpec on
    *b*) emulates conditioning at acquisition time: pairs whose *b* result
    does not match are discarded before emission. Every
    surviving pair is bit-identical to the same pair in an unconditioned run
    with the same seed.

    Returns
    -------
    events_a, events_b : EventList
        Time-sorted events of the screen detector and the *b* analyzer.
    """
    if not isinstance(cfg, SamplerConfig):
        raise ConfigError("cfg must be a SamplerConfig")
    if not state.path_populated:
        raise ContractViolation("sample_pairs needs a path-populated state")
    state = state.in_hv().normalize()
    x = default_grid(geom) if x_grid is None else np.asarray(x_grid, dtype=float)
    bases = cfg.b_basis_schedule.bases
    n = int(cfg.pair_count)
    if n == 0:
        return _empty(SCREEN_A, bases), _empty(POL_B, bases)

    p_first, cdfs = _conditional_tables(state, geom, x, bases)
    bounds = [(k, s, min(s + SHARD_SIZE, n)) for k, s in enumerate(range(0, n, SHARD_SIZE))]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            shards = list(pool.map(lambda b: _sample_shard(*b, cfg, p_first, cdfs), bounds))
    else:
        shards = [_sample_shard(*b, cfg, p_first, cdfs) for b in bounds]
    cols = {k: np.concatenate([s[k] for s in shards]) for k in shards[0]}

    emission = np.cumsum(cols["gaps"])
    keep_pair = np.ones(n, dtype=bool)
    if condition is not None:
        if isinstance(condition, ProjectorSpec) and condition.photon != "b":
            raise ConfigError("acquisition-time conditions act on photon b")
        keep_pair = Selector.parse(condition).mask(cols["basis"], cols["outcome"], bases)

    def build(detector, mask, times, value, tag):
        times = np.maximum(times[mask], 0.0)
        order = np.argsort(times, kind="stable")
        return EventList(detector, times[order], value[mask][order], tag[mask][order],
                         cols["idx"][mask][order], bases)

    no_tag = np.full(n, -1, dtype=np.int64)
    events_a = build(SCREEN_A, keep_pair & cols["keep_a"], emission + cols["jitter_a"], cols["a_bin"], no_tag)
    events_b = build(POL_B, keep_pair & cols["keep_b"], emission + cols["jitter_b"], cols["outcome"], cols["basis"])
    return events_a, events_b


def _check_sorted(ev: EventList, name: str):
    if ev.timestamp.size > 1 and np.any(np.diff(ev.timestamp) < 0):
        raise ContractViolation(f"{name} is not sorted by timestamp")


def coincidence_indices(events_a: EventList, events_b: EventList, window: float) -> np.ndarray:
    """Index pairs ``(i, j)`` of greedy earliest-first coincidences, shape ``(k, 2)``."""
    _check_sorted(events_a, "events_a")
    _check_sorted(events_b, "events_b")
    ta = events_a.timestamp.tolist()
    tb = events_b.timestamp.tolist()
    i = j = 0
    out = []
    while i < len(ta) and j < len(tb):
        dt = ta[i] - tb[j]
        if abs(dt) <= window:
            out.append((i, j))
            i += 1
            j += 1
        elif dt < 0:
            i += 1
        else:
            j += 1
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def coincidences(events_a: EventList, events_b: EventList,
                 window: float = 1e-9) -> list[tuple[DetectionEvent, DetectionEvent]]:
    """Pair detections closer than ``window`` seconds, each used at most once.

    Scans both time-sorted streams together and pairs the two current
    heads whenever ``|t_a - t_b| <= window``; otherwise the earlier head is
    discarded. The output is ordered by pair time. Swapping the streams
    yields the same pairs.
    """
    return [(events_a[i], events_b[j]) for i, j in coincidence_indices(events_a, events_b, window)]


def events_from_times(times, detector: str = SCREEN_A) -> EventList:
    """Bare event list from timestamps (value 0, no tag); for synthetic tests."""
    t = np.asarray(times, dtype=float)
    z = np.zeros(t.size, dtype=np.int64)
    return EventList(detector, t, z, z - 1, np.arange(t.size), ())

