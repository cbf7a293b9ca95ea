"""
Why a hidden coin flip is not enough
====================================

A classical source that sends definite, opposite H/V polarizations mimics
the singlet when both analyzers read H/V. Rotate both analyzers to a common
angle and the imitation breaks: the singlet stays perfectly anticorrelated
at every angle, while the classical pairs agree half the time at 45 degrees.
"""
import numpy as np

from qeraser import classical_vs_quantum

n = 100_000
angles = np.radians([0, 15, 30, 45, 60, 90])
table = classical_vs_quantum(angles, n, seed=1)
print(f"P(same outcome), {n} pairs per angle")
print(" angle  singlet  classical  classical(exact)")
for th, q, c, ce in zip(table["angle"], table["quantum"], table["classical"], table["classical_exact"]):
    print(f"{np.degrees(th):6.0f}  {q:7.4f}  {c:9.4f}  {ce:9.4f}")
