"""Simulation of the entangled-photon quantum eraser.

Submodules: :mod:`~qeraser.state` (two-photon amplitudes),
:mod:`~qeraser.optics` (Jones elements and path marking),
:mod:`~qeraser.screen` (far-field patterns, visibility, distinguishability),
:mod:`~qeraser.montecarlo` (event sampling and coincidences),
:mod:`~qeraser.ledger` (delayed-choice sorting) and :mod:`~qeraser.cli`.
"""
from .errors import (ConfigError, ContractViolation, ImpossibleOutcomeError, NonUnitaryElementError,
                     QEraserError, SeedMismatchError, UndefinedContrastError)
from .ledger import (ClassicalCoinModel, Ledger, LedgerRecord, PromptRun, classical_vs_quantum,
                     delayed_equals_prompt, histogram_visibility, max_normalized_deviation,
                     sort_subsets)
from .montecarlo import (BasisSchedule, DetectionEvent, EventList, SamplerConfig, Selector,
                         coincidences, sample_pairs)
from .optics import (JonesOperator, SlitElementPair, eraser_pair, hwp, identity, mark_paths,
                     polarizer, qwp, waveplate)
from .screen import (Pattern, ScreenGeometry, default_grid, distinguishability, pattern_conditional,
                     slit_amplitude, visibility, which_path_support)
from .state import (CIRCULAR, DIAGONAL, HV, PolarizationBasis, ProjectorSpec, TwoPhotonState,
                    change_basis, make_entangled_source, project, split_through_double_slit)

__all__ = [
    "ConfigError",
    "ContractViolation",
    "ImpossibleOutcomeError",
    "NonUnitaryElementError",
    "QEraserError",
    "SeedMismatchError",
    "UndefinedContrastError",
    "ClassicalCoinModel",
    "Ledger",
    "LedgerRecord",
    "PromptRun",
    "classical_vs_quantum",
    "delayed_equals_prompt",
    "histogram_visibility",
    "max_normalized_deviation",
    "sort_subsets",
    "BasisSchedule",
    "DetectionEvent",
    "EventList",
    "SamplerConfig",
    "Selector",
    "coincidences",
    "sample_pairs",
    "JonesOperator",
    "SlitElementPair",
    "eraser_pair",
    "hwp",
    "identity",
    "mark_paths",
    "polarizer",
    "qwp",
    "waveplate",
    "Pattern",
    "ScreenGeometry",
    "default_grid",
    "distinguishability",
    "pattern_conditional",
    "slit_amplitude",
    "visibility",
    "which_path_support",
    "CIRCULAR",
    "DIAGONAL",
    "HV",
    "PolarizationBasis",
    "ProjectorSpec",
    "TwoPhotonState",
    "change_basis",
    "make_entangled_source",
    "project",
    "split_through_double_slit",
]

__version__ = "0.1.0"
