"""Joint path/polarization state of the twin photons *a* and *b*.

The state is a dense array of eight complex amplitudes indexed as
``amplitudes[path, pol_a, pol_b]`` with ``path`` in {slit1, slit2} and each
polarization index running over the two kets of a :class:`PolarizationBasis`
(H/V unless the state was re-expressed with :func:`change_basis`).

Conventions
-----------
* ``|R> = (|H> + i|V>)/sqrt(2)`` and ``|L> = (|H> - i|V>)/sqrt(2)`` (vertical
  component a quarter cycle ahead for right-circular, ``exp(-i w t)`` time
  dependence).
* ``|+45> = (|H> + |V>)/sqrt(2)``, ``|-45> = (|H> - |V>)/sqrt(2)``.
* Before the double slit only the slit1 block is populated; it is read as
  "no path degree of freedom yet".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ContractViolation, ImpossibleOutcomeError

__all__ = [
    "TOL",
    "PolarizationBasis",
    "HV",
    "DIAGONAL",
    "CIRCULAR",
    "TwoPhotonState",
    "ProjectorSpec",
    "make_entangled_source",
    "product_state",
    "split_through_double_slit",
    "project",
    "change_basis",
    "outcome_probability",
]

#: Tolerance for state-level identities.
TOL = 1e-12
#: Probabilities below this cannot be renormalized.
IMPOSSIBLE = 1e-15

SQRT1_2 = 1.0 / np.sqrt(2.0)

Photon = Literal["a", "b"]
Outcome = Literal["first", "second"]
OUTCOMES = ("first", "second")


@dataclass(frozen=True)
class PolarizationBasis:
    """One of the two-outcome polarization bases.

    ``kind`` is ``"HV"``, ``"DIAG"`` (+45/-45), ``"CIRC"`` (R/L) or ``"LIN"``
    (linear at ``theta`` radians from horizontal). Use :meth:`linear` to build
    linear bases; it folds 0 and pi/4 onto HV and DIAG.
    """

    kind: Literal["HV", "DIAG", "CIRC", "LIN"]
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("HV", "DIAG", "CIRC", "LIN"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind != "LIN" and self.theta != 0.0:
            raise ValueError("theta is only meaningful for LIN bases")

    @classmethod
    def linear(cls, theta: float) -> PolarizationBasis:
        t = float(np.mod(theta, np.pi))
        if np.isclose(t, 0.0, atol=TOL) or np.isclose(t, np.pi, atol=TOL):
            return HV
        if np.isclose(t, np.pi / 4, atol=TOL):
            return DIAGONAL
        return cls("LIN", t)

    def kets(self) -> np.ndarray:
        """2x2 matrix whose columns are the first and second kets in H/V components."""
        if self.kind == "HV":
            return np.eye(2, dtype=complex)
        if self.kind == "DIAG":
            return SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=complex)
        if self.kind == "CIRC":
            return SQRT1_2 * np.array([[1, 1], [1j, -1j]], dtype=complex)
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, -s], [s, c]], dtype=complex)

    def ket(self, outcome: Outcome) -> np.ndarray:
        return self.kets()[:, OUTCOMES.index(outcome)]

    @property
    def label(self) -> str:
        if self.kind == "LIN":
            return f"LIN:{self.theta!r}"
        return self.kind

    def outcome_label(self, outcome: Outcome) -> str:
        i = OUTCOMES.index(outcome)
        names = {"HV": ("H", "V"), "DIAG": ("+45", "-45"), "CIRC": ("R", "L")}
        if self.kind in names:
            return names[self.kind][i]
        return f"{self.label}:{outcome}"

    @classmethod
    def from_label(cls, label: str) -> PolarizationBasis:
        if label in ("HV", "DIAG", "CIRC"):
            return cls(label)
        if label.startswith("LIN:"):
            return cls.linear(float(label[4:]))
        raise ValueError(f"unknown basis label {label!r}")

    def __str__(self):
        return self.label


HV = PolarizationBasis("HV")
DIAGONAL = PolarizationBasis("DIAG")
CIRCULAR = PolarizationBasis("CIRC")


@dataclass(frozen=True)
class ProjectorSpec:
    """Projection of one photon onto one ket of a basis."""

    photon: Photon
    basis: PolarizationBasis
    outcome: Outcome

    def __post_init__(self):
        if self.photon not in ("a", "b"):
            raise ValueError(f"photon must be 'a' or 'b', got {self.photon!r}")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be 'first' or 'second', got {self.outcome!r}")

    def complement(self) -> ProjectorSpec:
        other = "second" if self.outcome == "first" else "first"
        return ProjectorSpec(self.photon, self.basis, other)

    @property
    def label(self) -> str:
        return self.basis.outcome_label(self.outcome)


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Immutable eight-amplitude state ``amplitudes[path, pol_a, pol_b]``."""

    amplitudes: np.ndarray
    path_populated: bool = False
    bases: tuple[PolarizationBasis, PolarizationBasis] = field(default=(HV, HV))

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(2, 2, 2)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if not self.path_populated and np.any(amps[1] != 0):
            raise ContractViolation("slit2 amplitudes must vanish before the double slit")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def normalize(self) -> TwoPhotonState:
        n = self.norm()
        if n < IMPOSSIBLE:
            raise ImpossibleOutcomeError("cannot normalize a zero state")
        return TwoPhotonState(self.amplitudes / np.sqrt(n), self.path_populated, self.bases)

    def in_hv(self) -> TwoPhotonState:
        """The same state with both photons expressed in the H/V basis."""
        if self.bases == (HV, HV):
            return self
        return change_basis(change_basis(self, "a", HV), "b", HV)

    def amplitude(self, path: int, pol_a: int, pol_b: int) -> complex:
        return complex(self.amplitudes[path, pol_a, pol_b])

    def with_global_phase(self, phi: float) -> TwoPhotonState:
        return TwoPhotonState(self.amplitudes * np.exp(1j * phi), self.path_populated, self.bases)

    def __repr__(self):
        return (f"TwoPhotonState(path_populated={self.path_populated}, "
                f"bases=({self.bases[0]}, {self.bases[1]}), amplitudes={self.amplitudes.ravel()!r})")


def make_entangled_source(phase_convention: Literal["singlet", "triplet"] = "singlet") -> TwoPhotonState:
    """Polarization-entangled pair ``(|H>_a|V>_b -/+ |V>_a|H>_b)/sqrt(2)``.

    The singlet (minus sign) is anticorrelated for every common rotation of
    the two analyzers; the triplet (plus sign) only in the H/V basis.
    """
    if phase_convention == "singlet":
        sign = -1.0
    elif phase_convention == "triplet":
        sign = 1.0
    else:
        raise ValueError(f"phase_convention must be 'singlet' or 'triplet', got {phase_convention!r}")
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[0, 0, 1] = SQRT1_2
    amps[0, 1, 0] = sign * SQRT1_2
    return TwoPhotonState(amps)


def product_state(pol_a, pol_b) -> TwoPhotonState:
    """Unentangled pair from two H/V Jones vectors (normalized on return)."""
    block = np.outer(np.asarray(pol_a, dtype=complex), np.asarray(pol_b, dtype=complex))
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[0] = block
    return TwoPhotonState(amps).normalize()


def split_through_double_slit(state: TwoPhotonState) -> TwoPhotonState:
    """Send photon *a* through the double slit: equal-weight copy onto both paths."""
    if state.path_populated:
        raise ContractViolation("path degree of freedom is already populated")
    block = state.amplitudes[0] * SQRT1_2
    return TwoPhotonState(np.stack([block, block]), True, state.bases)


def _projector_in(state: TwoPhotonState, spec: ProjectorSpec) -> np.ndarray:
    # Projector onto spec's ket, written in the basis the photon is currently stored in.
    idx = 0 if spec.photon == "a" else 1
    stored = state.bases[idx].kets()
    v = stored.conj().T @ spec.basis.ket(spec.outcome)
    return np.outer(v, v.conj())


def _apply_one(amps: np.ndarray, photon: Photon, op: np.ndarray) -> np.ndarray:
    if photon == "a":
        return np.einsum("ij,pjb->pib", op, amps)
    return np.einsum("ij,paj->pai", op, amps)


def outcome_probability(state: TwoPhotonState, spec: ProjectorSpec) -> float:
    """Born-rule probability of ``spec`` without forming the post-measurement state."""
    projected = _apply_one(state.amplitudes, spec.photon, _projector_in(state, spec))
    return float(np.sum(np.abs(projected) ** 2) / state.norm())


def project(state: TwoPhotonState, spec: ProjectorSpec) -> tuple[TwoPhotonState, float]:
    """Measure one photon and keep the ``spec`` outcome.

    Returns
    -------
    post : TwoPhotonState
        Renormalized post-measurement state, in the same representation as
        ``state``.
    probability : float
        ``|A|**2`` summed over everything the measurement does not resolve.

    Raises
    ------
    ImpossibleOutcomeError
        If the outcome probability is below 1e-15.
    """
    projected = _apply_one(state.amplitudes, spec.photon, _projector_in(state, spec))
    prob = float(np.sum(np.abs(projected) ** 2) / state.norm())
    if prob < IMPOSSIBLE:
        raise ImpossibleOutcomeError(f"outcome {spec.label} on photon {spec.photon} has probability {prob:.3g}")
    post = TwoPhotonState(projected, state.path_populated, state.bases).normalize()
    return post, min(prob, 1.0)


def change_basis(state: TwoPhotonState, photon: Photon, basis: PolarizationBasis) -> TwoPhotonState:
    """Re-express one photon's amplitudes in ``basis`` (a pure relabelling)."""
    idx = 0 if photon == "a" else 1
    current = state.bases[idx]
    if current == basis:
        return state
    # new component k = <e_k|psi>, with psi's H/V components given by current.kets() @ old
    transform = basis.kets().conj().T @ current.kets()
    amps = _apply_one(state.amplitudes, photon, transform)
    bases = (basis, state.bases[1]) if idx == 0 else (state.bases[0], basis)
    return TwoPhotonState(amps, state.path_populated, bases)
