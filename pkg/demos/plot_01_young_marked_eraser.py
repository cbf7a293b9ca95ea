"""
Fringes, no fringes, fringes again
==================================

A singlet pair is sent through a double slit (photon a) and an analyzer
(photon b). We look at photon a's screen pattern three ways: with bare
slits, with quarter-wave plates that tag the path, and with the tagged
pattern sorted by b's result in the diagonal basis.
"""
import numpy as np

from qeraser import (DIAGONAL, HV, ProjectorSpec, ScreenGeometry, default_grid, eraser_pair,
                     make_entangled_source, mark_paths, pattern_conditional,
                     split_through_double_slit, visibility)
from qeraser.state import outcome_probability

geom = ScreenGeometry()            # 0.2 mm slits, 0.4 mm apart, 1 m, 702 nm
x = default_grid(geom)             # 2049 points over four envelope lobes each side
print(f"fringe period {geom.fringe_period * 1e3:.3f} mm, first envelope zero {geom.envelope_zero * 1e3:.3f} mm")

#############################################################################
# Bare slits. Conditioning on b = H leaves photon a vertically polarized in
# both slits, and the two paths interfere.
young = split_through_double_slit(make_entangled_source())
p = pattern_conditional(young, ProjectorSpec("b", HV, "first"), geom, x)
print(f"young, b = H        V = {visibility(p):.12f}")

#############################################################################
# Wave plates behind the slits turn the path into a polarization label.
# Summed over all b results the pattern is a plain sum of two single-slit
# envelopes.
marked = mark_paths(young, eraser_pair())
p = pattern_conditional(marked, None, geom, x)
print(f"marked, all b       V = {visibility(p):.2e}")

#############################################################################
# Sorting by b in the +45/-45 basis recovers fringes and antifringes.
for outcome in ("first", "second"):
    spec = ProjectorSpec("b", DIAGONAL, outcome)
    p = pattern_conditional(marked, spec, geom, x)
    label = DIAGONAL.outcome_label(outcome)
    centre = np.abs(x) <= geom.fringe_period / 2
    print(f"marked, b = {label:<4}    V = {visibility(p):.12f}   "
          f"P(b) = {outcome_probability(marked, spec):.3f}   "
          f"x of central max = {x[centre][np.argmax(p.density[centre] / p.incoherent[centre])] * 1e3:+.3f} mm")

#############################################################################
# Each Pattern writes a two-column CSV (x_m, density) for plotting elsewhere.
# ``p.to_csv("pattern.csv")``
