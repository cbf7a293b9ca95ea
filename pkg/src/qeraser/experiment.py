"""Assembling configured experiments: state preparation, analytic results, sweeps."""
from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .ledger import Ledger, PromptRun, delayed_equals_prompt, histogram_visibility, sort_subsets
from .montecarlo import Selector, sample_pairs
from .optics import (JonesOperator, SlitElementPair, hwp, identity, mark_paths, polarizer,
                     waveplate)
from .screen import (Pattern, ScreenGeometry, default_grid, distinguishability,
                     partition_residual, pattern_conditional, visibility)
from .state import (CIRCULAR, DIAGONAL, HV, OUTCOMES, PolarizationBasis, ProjectorSpec,
                    TwoPhotonState, make_entangled_source, outcome_probability,
                    split_through_double_slit)

__all__ = [
    "slit_pair",
    "prepare_state",
    "analytic_results",
    "analytic_reference",
    "duality_point",
    "duality_sweep",
    "run_sampler",
    "subset_report",
]


def _element(spec: dict) -> JonesOperator:
    kind = spec["type"]
    if kind == "identity":
        return identity()
    if kind == "qwp":
        return waveplate(np.pi / 2, spec.get("angle", 0.0))
    if kind == "hwp":
        return hwp(spec.get("angle", 0.0))
    if kind == "waveplate":
        return waveplate(spec.get("retardance", np.pi / 2), spec.get("angle", 0.0))
    if kind == "polarizer":
        return polarizer(PolarizationBasis.from_label(spec.get("basis", "HV")), spec.get("outcome", "first"))
    raise ValueError(f"unknown slit element type {kind!r}")


def slit_pair(cfg: ExperimentConfig) -> SlitElementPair | None:
    """Elements behind the slits, or ``None`` for the bare double slit.

    Raises :class:`~qeraser.errors.NonUnitaryElementError` for absorptive
    elements.
    """
    if cfg.slit_elements is not None:
        return SlitElementPair(_element(cfg.slit_elements[0]), _element(cfg.slit_elements[1]))
    if cfg.qwp_angles is None:
        return None
    a1, a2 = cfg.qwp_angles
    return SlitElementPair(waveplate(cfg.retardance, a1), waveplate(cfg.retardance, a2))


def prepare_state(cfg: ExperimentConfig) -> TwoPhotonState:
    state = split_through_double_slit(make_entangled_source(cfg.source))
    pair = slit_pair(cfg)
    return state if pair is None else mark_paths(state, pair)


def grid(cfg: ExperimentConfig) -> np.ndarray:
    return default_grid(cfg.geometry, cfg.grid_points, cfg.grid_zeros)


def _slug(label: str) -> str:
    return label.replace("+", "plus").replace("-", "minus").replace(":", "_").replace(".", "p")


def analytic_results(cfg: ExperimentConfig) -> tuple[dict[str, Pattern], dict]:
    """Patterns to write and the metric report for an analytic run.

    Returns ``(patterns, report)`` where ``patterns`` maps a file stem such
    as ``pattern_none`` or ``pattern_b_plus45`` to its :class:`Pattern`.
    """
    state = prepare_state(cfg)
    geom = cfg.geometry
    x = grid(cfg)
    patterns = {"pattern_none": pattern_conditional(state, None, geom, x)}
    entries = {"none": {"file": "pattern_none.csv", "probability": 1.0,
                        "visibility": visibility(patterns["pattern_none"])}}
    basis = cfg.b_condition_basis
    weighted_sum = np.zeros(x.size)
    if basis is not None:
        for o in OUTCOMES:
            spec = ProjectorSpec("b", basis, o)
            p = outcome_probability(state, spec)
            label = basis.outcome_label(o)
            if p < 1e-15:
                entries[label] = {"file": None, "probability": p, "visibility": None}
                continue
            stem = f"pattern_b_{_slug(label)}"
            patterns[stem] = pattern_conditional(state, spec, geom, x)
            weighted_sum += p * patterns[stem].density
            entries[label] = {"file": stem + ".csv", "probability": p,
                              "visibility": visibility(patterns[stem])}
    v, d = duality_point(state, geom, x)
    report = {
        "preset": cfg.preset,
        "config_hash": cfg.hash(),
        "patterns": entries,
        "visibility": entries["none"]["visibility"],
        "distinguishability": d,
        "duality": {"V": v, "D": d, "V2_plus_D2": v * v + d * d, "bound_ok": bool(v * v + d * d <= 1 + 1e-9)},
        "partition_residuals": {b.label: partition_residual(state, b, geom, x) for b in (HV, DIAGONAL, CIRCULAR)},
    }
    if basis is not None:
        report["condition_sum_residual"] = float(np.max(np.abs(weighted_sum - patterns["pattern_none"].density)))
    return patterns, report


def duality_point(state: TwoPhotonState, geom: ScreenGeometry, x_grid=None) -> tuple[float, float]:
    """(visibility of the unconditioned pattern, path distinguishability)."""
    x = default_grid(geom) if x_grid is None else x_grid
    return visibility(pattern_conditional(state, None, geom, x)), distinguishability(state)


def duality_sweep(kind: str = "angle", points: int = 33, source: str = "singlet",
                  geom: ScreenGeometry | None = None, x_grid=None, angles=(np.pi / 4, -np.pi / 4)) -> np.ndarray:
    """V and D across intermediate path markings.

    ``kind="angle"``: quarter-wave plates at ``(t, -t)`` for ``t`` in
    ``[0, pi/4]``. ``kind="retardance"``: plates at ``angles`` with
    retardance in ``[0, pi/2]``. Returns a structured array with fields
    ``parameter, V, D, V2_plus_D2``.
    """
    geom = geom or ScreenGeometry()
    x = default_grid(geom) if x_grid is None else x_grid
    base = split_through_double_slit(make_entangled_source(source))
    if kind == "angle":
        params = np.linspace(0.0, np.pi / 4, points)
        pairs = [SlitElementPair(waveplate(np.pi / 2, t), waveplate(np.pi / 2, -t)) for t in params]
    elif kind == "retardance":
        params = np.linspace(0.0, np.pi / 2, points)
        pairs = [SlitElementPair(waveplate(r, angles[0]), waveplate(r, angles[1])) for r in params]
    else:
        raise ValueError(f"kind must be 'angle' or 'retardance', got {kind!r}")
    out = np.zeros(points, dtype=[("parameter", float), ("V", float), ("D", float), ("V2_plus_D2", float)])
    for i, (t, pair) in enumerate(zip(params, pairs)):
        v, d = duality_point(mark_paths(base, pair), geom, x)
        out[i] = (t, v, d, v * v + d * d)
    return out


def run_sampler(cfg: ExperimentConfig, condition=None):
    """Sample the configured run; returns ``(events_a, events_b, ledger)``."""
    state = prepare_state(cfg)
    s = cfg.sampler
    x = grid(cfg)
    events_a, events_b = sample_pairs(state, cfg.geometry, s, x, condition=condition)
    ledger = Ledger.from_events(events_a, events_b, s.coincidence_window,
                                seed=s.rng_seed, config_hash=cfg.hash(), bins=x.size - 1)
    return events_a, events_b, ledger


def analytic_reference(cfg: ExperimentConfig, selector) -> Pattern:
    """Analytic *a* pattern expected for a ledger subset.

    Unions over a whole basis (and ``all``) reproduce the unconditioned
    pattern; a single outcome gives the conditional one.
    """
    sel = Selector.parse(selector)
    spec = None if sel.outcome is None else ProjectorSpec("b", sel.basis, sel.outcome)
    return pattern_conditional(prepare_state(cfg), spec, cfg.geometry, grid(cfg))


def subset_report(cfg: ExperimentConfig, ledger: Ledger, selectors, prompt: bool = True) -> dict:
    """Histogram summary, visibility and delayed-vs-prompt verdicts per selector."""
    bins = ledger.bins if ledger.bins is not None else cfg.grid_points - 1
    out = {"seed": ledger.seed, "config_hash": ledger.config_hash, "records": len(ledger), "subsets": {}}
    prompt_runs, analytic = [], {}
    for text in selectors:
        sel = Selector.parse(text)
        hist = sort_subsets(ledger, sel, bins)
        try:
            ref = analytic_reference(cfg, sel)
        except ValueError:
            ref = None
        counts = int(hist.sum())
        entry = {"count": counts, "nonzero_bins": int(np.count_nonzero(hist))}
        if ref is not None and counts:
            analytic[sel.label] = ref
            centre = np.abs(ref.bin_centers()) <= ref.fringe_period
            per_bin = float(hist[centre].mean())
            entry["visibility"] = histogram_visibility(hist, ref)
            entry["statistical_floor"] = 3.0 / np.sqrt(per_bin) if per_bin > 0 else None
        else:
            entry["visibility"] = None
            entry["statistical_floor"] = None
        out["subsets"][sel.label] = entry
        if prompt and cfg.sampler is not None:
            _, _, prompt_ledger = run_sampler(cfg, condition=sel)
            prompt_runs.append(PromptRun(prompt_ledger.seed, prompt_ledger.config_hash, sel,
                                         sort_subsets(prompt_ledger, "all", bins)))
    if prompt_runs:
        out["delayed_equals_prompt"] = delayed_equals_prompt(ledger, prompt_runs, analytic)
    return out
