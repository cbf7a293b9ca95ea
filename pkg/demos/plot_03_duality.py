"""
Between full fringes and full path knowledge
=============================================

Rotating the wave plates from 0 to 45 degrees moves the setup continuously
from no path tag to a perfect one. Visibility V and distinguishability D
trade off and never exceed V^2 + D^2 = 1; for a pure state they sit on it.
"""
import numpy as np

from qeraser.experiment import duality_sweep

rows = duality_sweep("angle", points=9)
print(" angle(deg)      V        D     V^2+D^2")
for r in rows:
    print(f"{np.degrees(r['parameter']):10.2f}  {r['V']:.5f}  {r['D']:.5f}  {r['V2_plus_D2']:.9f}")

#############################################################################
# The same trade-off with plates fixed at +/-45 degrees and the retardance
# raised from zero to a quarter wave.
rows = duality_sweep("retardance", points=5)
print("\nretardance/pi      V        D")
for r in rows:
    print(f"{r['parameter'] / np.pi:12.3f}  {r['V']:.5f}  {r['D']:.5f}")
