"""Far-field screen model, conditional patterns and fringe metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolation, UndefinedContrastError
from .state import (CIRCULAR, HV, OUTCOMES, TOL, PolarizationBasis, ProjectorSpec,
                    TwoPhotonState, outcome_probability, project)

__all__ = [
    "ScreenGeometry",
    "Pattern",
    "slit_amplitude",
    "slit_amplitudes",
    "default_grid",
    "pattern_conditional",
    "visibility",
    "distinguishability",
    "which_path_support",
    "partition_residual",
]

SLITS = ("slit1", "slit2")


@dataclass(frozen=True)
class ScreenGeometry:
    """Double-slit geometry in SI units.

    ``slit_separation`` is centre to centre. The default describes two
    0.2 mm slits with a 0.2 mm gap between them, 702 nm light and a screen
    1 m away.
    """

    slit_width: float = 2.0e-4
    slit_separation: float = 4.0e-4
    screen_distance: float = 1.0
    wavelength: float = 702e-9

    def __post_init__(self):
        for name in ("slit_width", "slit_separation", "screen_distance", "wavelength"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if self.slit_separation < self.slit_width:
            raise ValueError("slit_separation must be at least slit_width (slits may not overlap)")

    @property
    def scale(self) -> float:
        """lambda * L, the far-field length scale."""
        return self.wavelength * self.screen_distance

    @property
    def fringe_period(self) -> float:
        return self.scale / self.slit_separation

    @property
    def envelope_zero(self) -> float:
        return self.scale / self.slit_width


def slit_amplitudes(x, geom: ScreenGeometry) -> np.ndarray:
    """Both slits' far-field amplitudes, shape ``(2,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    env = np.sinc(geom.slit_width * x / geom.scale)
    half = np.pi * geom.slit_separation * x / geom.scale
    return np.stack([env * np.exp(1j * half), env * np.exp(-1j * half)])


def slit_amplitude(x, slit: str, geom: ScreenGeometry):
    """Fraunhofer amplitude of one slit at screen position ``x``.

    ``sinc(pi*w*x/(lambda*L)) * exp(+-i*pi*d*x/(lambda*L))`` with ``+`` for
    slit1. Unit amplitude at ``x = 0`` for either slit.
    """
    if slit not in SLITS:
        raise ValueError(f"slit must be one of {SLITS}, got {slit!r}")
    amp = slit_amplitudes(x, geom)[SLITS.index(slit)]
    return complex(amp) if amp.ndim == 0 else amp


def default_grid(geom: ScreenGeometry, points: int = 2049, zeros: float = 4.0) -> np.ndarray:
    """Symmetric grid spanning ``+-zeros`` envelope zeros.

    With the odd default point count ``x = 0`` is a grid node and, for the
    default geometry, every fringe extremum falls on a node.
    """
    half = zeros * geom.envelope_zero
    return np.linspace(-half, half, points)


def _check_grid(x: np.ndarray):
    if x.ndim != 1 or x.size < 2:
        raise ValueError("x_grid must be a 1-D array with at least two points")
    step = np.diff(x)
    if np.any(step <= 0):
        raise ValueError("x_grid must be strictly ascending")
    mean = step.mean()
    if np.max(np.abs(step - mean)) > 1e-12 * mean:
        raise ValueError("x_grid must be uniform")


@dataclass(frozen=True, eq=False)
class Pattern:
    """Detection density on a uniform screen grid.

    ``incoherent`` (optional) is the same state's pattern with the path
    cross term removed; when present :func:`visibility` measures fringe
    contrast relative to it so the diffraction envelope does not count as
    contrast. ``fringe_period`` enables the window and sampling checks.
    """

    x_grid: np.ndarray
    density: np.ndarray
    incoherent: np.ndarray | None = None
    fringe_period: float | None = None

    def __post_init__(self):
        x = np.array(self.x_grid, dtype=float)
        d = np.array(self.density, dtype=float)
        _check_grid(x)
        if d.shape != x.shape:
            raise ValueError("density and x_grid must have the same shape")
        if np.any(d < 0):
            raise ValueError("density must be non-negative")
        for a in (x, d):
            a.setflags(write=False)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "density", d)
        if self.incoherent is not None:
            inc = np.array(self.incoherent, dtype=float)
            inc.setflags(write=False)
            object.__setattr__(self, "incoherent", inc)

    @property
    def step(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    @property
    def normalization(self) -> float:
        """Trapezoid integral of the density over the grid."""
        return float(np.sum(self.bin_weights()))

    def bin_weights(self) -> np.ndarray:
        """Trapezoid weight of each of the ``len(x_grid) - 1`` grid intervals."""
        return 0.5 * (self.density[1:] + self.density[:-1]) * self.step

    def bin_probabilities(self) -> np.ndarray:
        w = self.bin_weights()
        return w / w.sum()

    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.x_grid[1:] + self.x_grid[:-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("x_m,density\n")
            for x, d in zip(self.x_grid, self.density):
                fh.write(f"{x:.17g},{d:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> Pattern:
        with open(Path(path), newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["x_m", "density"]:
                raise ValueError(f"unexpected pattern header {header}")
            rows = np.array([[float(a), float(b)] for a, b in reader])
        return cls(rows[:, 0], rows[:, 1])


def _branch_amplitudes(state: TwoPhotonState, x: np.ndarray, geom: ScreenGeometry) -> np.ndarray:
    # psi[x, pol_a, pol_b] = sum_path f_path(x) * amp[path, pol_a, pol_b]
    f = slit_amplitudes(x, geom)
    amps = state.amplitudes
    return f[0][:, None, None] * amps[0] + f[1][:, None, None] * amps[1]


def pattern_conditional(state: TwoPhotonState, condition: ProjectorSpec | None,
                        geom: ScreenGeometry, x_grid=None) -> Pattern:
    """Screen pattern of photon *a*, optionally in coincidence with a *b* outcome.

    Without a condition every polarization of both photons is summed
    incoherently. With one, photon *b* is projected first and the
    renormalized state is used, so the returned density is the conditional
    one; multiply by the outcome probability to recover the joint density.

    Raises
    ------
    ContractViolation
        If the path degree of freedom is not populated or the condition
        does not act on photon *b*.
    ImpossibleOutcomeError
        If the condition has (numerically) zero probability.
    """
    if not state.path_populated:
        raise ContractViolation("pattern_conditional needs a path-populated state")
    x = default_grid(geom) if x_grid is None else np.asarray(x_grid, dtype=float)
    if condition is not None:
        if condition.photon != "b":
            raise ContractViolation("screen patterns are conditioned on photon b")
        state, _ = project(state, condition)
    state = state.normalize()
    psi = _branch_amplitudes(state, x, geom)
    density = np.sum(np.abs(psi) ** 2, axis=(1, 2))
    f2 = np.abs(slit_amplitudes(x, geom)) ** 2
    weights = np.sum(np.abs(state.amplitudes) ** 2, axis=(1, 2))
    incoherent = weights[0] * f2[0] + weights[1] * f2[1]
    return Pattern(x, density, incoherent, geom.fringe_period)


def visibility(p: Pattern, window: tuple[float, float] | None = None) -> float:
    """Fringe contrast ``(max - min) / (max + min)`` over ``window``.

    When the pattern carries its incoherent envelope the contrast is taken
    on ``density / incoherent``; points where the envelope vanishes are
    skipped. Default window: one fringe period either side of ``x = 0``
    (the whole grid if the period is unknown).
    """
    x = p.x_grid
    if window is None:
        window = (-p.fringe_period, p.fringe_period) if p.fringe_period else (x[0], x[-1])
    lo, hi = window
    if p.fringe_period is not None:
        if hi - lo < p.fringe_period * (1 - 1e-9):
            raise ContractViolation("visibility window must span at least one fringe period")
        if p.step >= p.fringe_period / 64:
            raise ContractViolation("grid step must be below 1/64 of the fringe period")
    mask = (x >= lo - 1e-9 * p.step) & (x <= hi + 1e-9 * p.step)
    values = p.density[mask]
    if p.incoherent is not None:
        env = p.incoherent[mask]
        keep = env > 1e-12 * np.max(p.incoherent)
        values = values[keep] / env[keep]
    if values.size == 0:
        raise UndefinedContrastError("no grid points inside the visibility window")
    vmax, vmin = float(np.max(values)), float(np.min(values))
    if vmax + vmin < 1e-30:
        raise UndefinedContrastError("max + min vanishes inside the window")
    return min(max((vmax - vmin) / (vmax + vmin), 0.0), 1.0)


def _marker_states(state: TwoPhotonState) -> tuple[np.ndarray | None, np.ndarray | None]:
    amps = state.in_hv().amplitudes
    out = []
    for branch in amps:
        v = branch.ravel()
        n = np.vdot(v, v).real
        out.append(None if n < TOL**2 else v / np.sqrt(n))
    return out[0], out[1]


def distinguishability(state: TwoPhotonState) -> float:
    """Trace distance between the polarization markers left on slit1 and slit2.

    A branch with no weight makes the other one fully identified, so the
    result is then 1.
    """
    if not state.path_populated:
        raise ContractViolation("distinguishability needs a path-populated state")
    m1, m2 = _marker_states(state)
    if m1 is None or m2 is None:
        return 1.0
    diff = np.outer(m1, m1.conj()) - np.outer(m2, m2.conj())
    d = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
    return min(max(d, 0.0), 1.0)


def which_path_support(state: TwoPhotonState, a_basis: PolarizationBasis = CIRCULAR,
                       b_basis: PolarizationBasis = HV) -> dict[tuple[str, str], tuple[float, float]]:
    """Weight on each path branch for every joint (a, b) polarization outcome.

    Keys are outcome labels, e.g. ``("R", "H")``; values are
    ``(weight_slit1, weight_slit2)`` as joint probabilities.
    """
    amps = state.in_hv().amplitudes
    out = {}
    for oa in OUTCOMES:
        ka = a_basis.ket(oa)
        for ob in OUTCOMES:
            kb = b_basis.ket(ob)
            w = [abs(ka.conj() @ amps[p] @ kb.conj()) ** 2 for p in (0, 1)]
            out[(a_basis.outcome_label(oa), b_basis.outcome_label(ob))] = (float(w[0]), float(w[1]))
    return out


def partition_residual(state: TwoPhotonState, basis: PolarizationBasis,
                       geom: ScreenGeometry, x_grid=None) -> float:
    """Max pointwise gap between the unconditioned pattern and the
    probability-weighted sum of the two conditional ones for ``basis`` on *b*."""
    total = pattern_conditional(state, None, geom, x_grid)
    acc = np.zeros_like(total.density)
    for o in OUTCOMES:
        spec = ProjectorSpec("b", basis, o)
        p = outcome_probability(state, spec)
        if p < 1e-15:
            continue
        acc = acc + p * pattern_conditional(state, spec, geom, x_grid).density
    return float(np.max(np.abs(acc - total.density)))
