"""Jones-calculus elements and per-slit path marking.

Wave plates use ``R(theta) @ diag(1, exp(i*retardance)) @ R(-theta)`` with the
fast axis at ``theta`` from horizontal, so ``qwp(0) == diag(1, i)``. With this
convention ``qwp(+pi/4)`` takes V to R and ``qwp(-pi/4)`` takes V to L.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NonUnitaryElementError
from .state import TOL, PolarizationBasis, TwoPhotonState

__all__ = [
    "JonesOperator",
    "SlitElementPair",
    "rotation",
    "waveplate",
    "qwp",
    "hwp",
    "polarizer",
    "identity",
    "mark_paths",
    "eraser_pair",
]


@dataclass(frozen=True, eq=False)
class JonesOperator:
    """A 2x2 complex matrix acting on one photon's H/V polarization vector."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"Jones operator must be 2x2, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __matmul__(self, other):
        if isinstance(other, JonesOperator):
            return JonesOperator(self.m @ other.m)
        return self.m @ np.asarray(other, dtype=complex)

    def is_unitary(self, tol: float = TOL) -> bool:
        return bool(np.max(np.abs(self.m @ self.m.conj().T - np.eye(2))) < tol)

    def is_projector(self, tol: float = TOL) -> bool:
        herm = np.max(np.abs(self.m - self.m.conj().T)) < tol
        idem = np.max(np.abs(self.m @ self.m - self.m)) < tol
        return bool(herm and idem)

    def transmission(self, jones_vector) -> float:
        v = np.asarray(jones_vector, dtype=complex)
        return float(np.sum(np.abs(self.m @ v) ** 2) / np.sum(np.abs(v) ** 2))


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def waveplate(retardance: float, fast_axis_angle: float) -> JonesOperator:
    """Linear retarder delaying the slow axis by ``retardance`` radians."""
    r = rotation(fast_axis_angle)
    return JonesOperator(r @ np.diag([1.0, np.exp(1j * retardance)]) @ r.T)


def qwp(fast_axis_angle: float) -> JonesOperator:
    return waveplate(np.pi / 2, fast_axis_angle)


def hwp(fast_axis_angle: float) -> JonesOperator:
    return waveplate(np.pi, fast_axis_angle)


def identity() -> JonesOperator:
    return JonesOperator(np.eye(2))


def polarizer(basis: PolarizationBasis, outcome: str = "first") -> JonesOperator:
    """Rank-1 projector onto one ket of ``basis``."""
    k = basis.ket(outcome)
    return JonesOperator(np.outer(k, k.conj()))


@dataclass(frozen=True, eq=False)
class SlitElementPair:
    """The two elements placed behind slit 1 and slit 2.

    Both must be unitary: marking the path may not absorb photons.
    """

    slit1_op: JonesOperator
    slit2_op: JonesOperator

    def __post_init__(self):
        for name in ("slit1_op", "slit2_op"):
            if not getattr(self, name).is_unitary():
                raise NonUnitaryElementError(f"{name} is not unitary; absorptive elements cannot mark paths")


def eraser_pair(angle1: float = np.pi / 4, angle2: float = -np.pi / 4,
                retardance: float = np.pi / 2) -> SlitElementPair:
    """Wave plates behind each slit; defaults send V to R (slit 1) and L (slit 2)."""
    return SlitElementPair(waveplate(retardance, angle1), waveplate(retardance, angle2))


def mark_paths(state: TwoPhotonState, pair: SlitElementPair) -> TwoPhotonState:
    """Apply ``pair.slit1_op`` to photon *a* on the slit1 branch and ``slit2_op`` on slit2.

    The result is returned in the H/V representation.
    """
    if not state.path_populated:
        raise ContractViolation("mark_paths needs a path-populated state (call split_through_double_slit)")
    amps = state.in_hv().amplitudes
    marked = np.stack([
        np.einsum("ij,jb->ib", pair.slit1_op.m, amps[0]),
        np.einsum("ij,jb->ib", pair.slit2_op.m, amps[1]),
    ])
    return TwoPhotonState(marked, True)
