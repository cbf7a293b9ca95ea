"""Append-only record of coincident pairs and post-hoc (delayed-choice) sorting.

Alice's screen bins and Bob's analyzer results are written once, as the
pairs are registered. Sorting them afterwards by Bob's basis and outcome
only *selects* records; nothing stored can change.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ContractViolation, SeedMismatchError
from .montecarlo import EventList, Selector, coincidence_indices
from .screen import Pattern
from .state import OUTCOMES, PolarizationBasis, ProjectorSpec, make_entangled_source, project

__all__ = [
    "LedgerRecord",
    "Ledger",
    "PromptRun",
    "sort_subsets",
    "histogram_visibility",
    "max_normalized_deviation",
    "delayed_equals_prompt",
    "ClassicalCoinModel",
    "classical_vs_quantum",
]

HEADER_MAGIC = "# qeraser-ledger v1"
COLUMNS = "pair_id,a_bin,b_basis,b_outcome"


class LedgerRecord(NamedTuple):
    pair_id: int
    a_position_bin: int
    b_basis: PolarizationBasis
    b_outcome: str


class Ledger:
    """Append-only store of :class:`LedgerRecord`.

    Records cannot be modified or removed and ``pair_id`` values are unique.
    ``seed`` and ``config_hash`` identify the run that produced the records.
    """

    def __init__(self, seed: int = 0, config_hash: str = "", bins: int | None = None):
        self.seed = int(seed)
        self.config_hash = str(config_hash)
        self.bins = bins
        self._records: list[LedgerRecord] = []
        self._ids: set[int] = set()
        self._cache = None

    def append(self, record: LedgerRecord) -> None:
        record = LedgerRecord(int(record.pair_id), int(record.a_position_bin), record.b_basis, record.b_outcome)
        if record.pair_id in self._ids:
            raise ContractViolation(f"pair_id {record.pair_id} already recorded; ledger records are immutable")
        if record.b_outcome not in OUTCOMES:
            raise ValueError(f"b_outcome must be one of {OUTCOMES}")
        if record.a_position_bin < 0:
            raise ValueError("a_position_bin must be non-negative")
        self._records.append(record)
        self._ids.add(record.pair_id)
        self._cache = None

    def extend(self, records: Iterable[LedgerRecord]) -> None:
        for r in records:
            self.append(r)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(tuple(self._records))

    def __getitem__(self, i) -> LedgerRecord:
        return self._records[i]

    @property
    def records(self) -> tuple[LedgerRecord, ...]:
        return tuple(self._records)

    def columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[PolarizationBasis, ...]]:
        """``(a_bin, basis_index, outcome_index, bases)`` as read-only arrays."""
        if self._cache is None:
            bases: list[PolarizationBasis] = []
            for r in self._records:
                if r.b_basis not in bases:
                    bases.append(r.b_basis)
            a = np.array([r.a_position_bin for r in self._records], dtype=np.int64)
            k = np.array([bases.index(r.b_basis) for r in self._records], dtype=np.int64)
            o = np.array([OUTCOMES.index(r.b_outcome) for r in self._records], dtype=np.int64)
            for arr in (a, k, o):
                arr.setflags(write=False)
            self._cache = (a, k, o, tuple(bases))
        return self._cache

    @classmethod
    def from_events(cls, events_a: EventList, events_b: EventList, window: float,
                    seed: int = 0, config_hash: str = "", bins: int | None = None) -> Ledger:
        """Record every coincidence; ``pair_id`` is the coincidence's index in time order."""
        ledger = cls(seed, config_hash, bins)
        for k, (i, j) in enumerate(coincidence_indices(events_a, events_b, window)):
            basis = events_b.bases[int(events_b.tag[j])]
            ledger.append(LedgerRecord(k, int(events_a.value[i]), basis, OUTCOMES[int(events_b.value[j])]))
        return ledger

    # -- file format ---------------------------------------------------------

    def header(self) -> str:
        bins = "" if self.bins is None else f" bins={self.bins}"
        return f"{HEADER_MAGIC} seed={self.seed} config_hash={self.config_hash}{bins}"

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(self.header() + "\n" + COLUMNS + "\n")
        for r in self._records:
            buf.write(f"{r.pair_id},{r.a_position_bin},{r.b_basis.label},{r.b_outcome}\n")
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.dumps())

    @classmethod
    def read(cls, path) -> Ledger:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or not lines[0].startswith(HEADER_MAGIC):
            raise ValueError(f"{path}: not a qeraser ledger (missing header line)")
        meta = dict(tok.split("=", 1) for tok in lines[0][len(HEADER_MAGIC):].split())
        if len(lines) < 2 or lines[1] != COLUMNS:
            raise ValueError(f"{path}: expected column line {COLUMNS!r}")
        bins = int(meta["bins"]) if "bins" in meta else None
        ledger = cls(int(meta.get("seed", 0)), meta.get("config_hash", ""), bins)
        for lineno, line in enumerate(lines[2:], start=3):
            if not line:
                continue
            try:
                pid, abin, basis, outcome = line.split(",")
                ledger.append(LedgerRecord(int(pid), int(abin), PolarizationBasis.from_label(basis), outcome))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
        return ledger

    def checksum(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def sort_subsets(records, selector="all", bins: int | None = None) -> np.ndarray:
    """Histogram of *a* screen bins over the records matching ``selector``.

    ``records`` is a :class:`Ledger` or an iterable of :class:`LedgerRecord`.
    Pure selection: nothing is modified, and an empty selection gives an
    all-zero histogram.
    """
    ledger = records if isinstance(records, Ledger) else _as_ledger(records)
    if bins is None:
        bins = ledger.bins
    a, k, o, bases = ledger.columns()
    sel = Selector.parse(selector).mask(k, o, bases)
    if bins is None:
        bins = int(a.max()) + 1 if a.size else 0
    if a.size and a.max() >= bins:
        raise ValueError(f"record bin {a.max()} outside histogram of {bins} bins")
    return np.bincount(a[sel], minlength=bins).astype(np.int64)


def _as_ledger(records) -> Ledger:
    ledger = Ledger()
    ledger.extend(records)
    return ledger


def histogram_visibility(counts, reference: Pattern, window: tuple[float, float] | None = None) -> float:
    """Fringe visibility of a sampled histogram.

    The histogram is divided by the reference's incoherent envelope
    (integrated per bin) and a sinusoid at the known fringe frequency is
    fitted by weighted least squares over ``window`` (default: one fringe
    period either side of the centre). Returns amplitude / offset.
    Fitting avoids the upward bias that max/min picking has on noisy counts.
    """
    counts = np.asarray(counts, dtype=float)
    period = reference.fringe_period
    if period is None or reference.incoherent is None:
        raise ContractViolation("reference pattern must carry its envelope and fringe period")
    x = reference.bin_centers()
    env = 0.5 * (reference.incoherent[1:] + reference.incoherent[:-1])
    lo, hi = window if window is not None else (-period, period)
    sel = (x >= lo) & (x <= hi) & (env > 1e-12 * env.max())
    total = counts.sum()
    if total == 0 or not np.any(counts[sel] > 0):
        return 0.0
    expected = env[sel] / env.sum() * total
    ratio = counts[sel] / expected
    k = 2 * np.pi / period
    design = np.column_stack([np.ones(sel.sum()), np.cos(k * x[sel]), np.sin(k * x[sel])])
    w = np.sqrt(expected)
    coef, *_ = np.linalg.lstsq(design * w[:, None], ratio * w, rcond=None)
    if coef[0] <= 0:
        return 0.0
    return float(np.hypot(coef[1], coef[2]) / coef[0])


@dataclass(frozen=True)
class PromptRun:
    """Histogram collected by conditioning during acquisition."""

    seed: int
    config_hash: str
    selector: Selector
    histogram: np.ndarray


SPARSE_EXPECTED = 10.0


def max_normalized_deviation(counts, probs, min_expected: float = SPARSE_EXPECTED) -> float:
    """Largest ``|observed - expected| / sqrt(expected)`` over histogram bins.

    ``expected = probs * counts.sum()``. Bins expecting fewer than
    ``min_expected`` counts are pooled into one bin first, since a Poisson
    count with a mean near zero has tails far heavier than the Gaussian
    approximation behind a sigma threshold.
    """
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(probs, dtype=float) * counts.sum()
    sparse = expected < min_expected
    obs = np.append(counts[~sparse], counts[sparse].sum())
    exp = np.append(expected[~sparse], expected[sparse].sum())
    dev = np.abs(obs - exp) / np.sqrt(np.maximum(exp, 1.0))
    return float(dev.max()) if dev.size else 0.0


def delayed_equals_prompt(ledger: Ledger, prompt: Iterable[PromptRun],
                          analytic: dict[str, Pattern], n_sigma: float = 5.0) -> dict:
    """Compare post-hoc sorted subsets with acquisition-time conditioning.

    For each prompt run the ledger subset with the same selector must give a
    bit-identical histogram, and both must agree with the analytic pattern
    ``analytic[selector.label]``: every bin within ``n_sigma`` Poisson
    standard deviations after pooling sparse bins (see
    :func:`max_normalized_deviation`).

    Raises
    ------
    SeedMismatchError
        If a prompt run's seed or config hash differs from the ledger's.
    """
    report = {"seed": ledger.seed, "config_hash": ledger.config_hash, "subsets": {}}
    all_pass = True
    for run in prompt:
        if run.seed != ledger.seed or run.config_hash != ledger.config_hash:
            raise SeedMismatchError(
                f"prompt run (seed={run.seed}, hash={run.config_hash[:12]}) does not match ledger "
                f"(seed={ledger.seed}, hash={ledger.config_hash[:12]}); comparison refused")
        label = run.selector.label
        sorted_hist = sort_subsets(ledger, run.selector, len(run.histogram))
        entry = {"count": int(sorted_hist.sum()),
                 "bit_exact": bool(np.array_equal(sorted_hist, run.histogram))}
        ok = entry["bit_exact"]
        if label in analytic:
            ref = analytic[label]
            dev = max_normalized_deviation(sorted_hist, ref.bin_probabilities())
            entry["max_deviation_sigma"] = dev
            entry["statistically_consistent"] = bool(dev < n_sigma)
            entry["visibility"] = histogram_visibility(sorted_hist, ref)
            ok = ok and entry["statistically_consistent"]
        entry["pass"] = bool(ok)
        all_pass &= ok
        report["subsets"][label] = entry
    report["pass"] = bool(all_pass)
    return report


@dataclass(frozen=True)
class ClassicalCoinModel:
    """Pairs carrying definite, opposite H/V polarizations.

    Which photon is H is random per pair. Each photon passes a linear
    analyzer at angle ``theta`` with Malus probability
    ``cos^2(theta - polarization angle)``; passing is outcome ``first``.
    """

    def sample(self, theta_a: float, theta_b: float, n: int, rng: np.random.Generator):
        a_is_h = rng.random(n) < 0.5
        pol_a = np.where(a_is_h, 0.0, np.pi / 2)
        pol_b = pol_a + np.pi / 2
        pass_a = rng.random(n) < np.cos(theta_a - pol_a) ** 2
        pass_b = rng.random(n) < np.cos(theta_b - pol_b) ** 2
        return np.where(pass_a, 0, 1), np.where(pass_b, 0, 1)

    @staticmethod
    def p_same(theta: float) -> float:
        """Exact probability of equal outcomes with both analyzers at ``theta``."""
        return 0.5 * np.sin(2 * theta) ** 2


def _singlet_joint(theta: float) -> np.ndarray:
    # P(outcome_a, outcome_b) with both analyzers at linear angle theta
    basis = PolarizationBasis.linear(theta)
    source = make_entangled_source("singlet")
    joint = np.zeros((2, 2))
    for i, oa in enumerate(OUTCOMES):
        try:
            post, pa = project(source, ProjectorSpec("a", basis, oa))
        except ValueError:
            continue
        for j, ob in enumerate(OUTCOMES):
            try:
                _, pb = project(post, ProjectorSpec("b", basis, ob))
            except ValueError:
                pb = 0.0
            joint[i, j] = pa * pb
    return joint


def classical_vs_quantum(angles, n: int, seed: int = 0) -> dict[str, np.ndarray]:
    """P(same outcome) versus common analyzer angle for the singlet and the coin model.

    Both are sampled with ``n`` pairs per angle; the exact values are
    returned alongside as ``quantum_exact`` and ``classical_exact``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    angles = np.asarray(angles, dtype=float)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    model = ClassicalCoinModel()
    q, c, qe, ce = (np.zeros(angles.size) for _ in range(4))
    for i, theta in enumerate(angles):
        joint = _singlet_joint(theta)
        qe[i] = joint[0, 0] + joint[1, 1]
        draws = rng.multinomial(n, joint.ravel() / joint.sum())
        q[i] = (draws[0] + draws[3]) / n
        oa, ob = model.sample(theta, theta, n, rng)
        c[i] = np.mean(oa == ob)
        ce[i] = model.p_same(theta)
    return {"angle": angles, "quantum": q, "classical": c,
            "quantum_exact": qe, "classical_exact": ce}
