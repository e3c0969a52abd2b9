"""Quasi-energy sheets of the three-replica model along xi_2 = 0.

Gaps open at the origin (second order in eps) and near |xi| = 1 (first order),
and the spectrum is symmetric about zero.
"""

import numpy as np

from floquet_replica.replica import ReplicaModel, band_structure, line_cut, ring_gap

model = ReplicaModel(n=1, m=1.0, eps=0.1)
bands = band_structure(model, line_cut(-2.0, 2.0, 401))
print(f"sheets: {bands.sheets.shape[1]}, symmetry defect {bands.symmetry_defect():.2e}")

for xi1 in (0.0, 0.5, 1.0, 1.5):
    i = int(np.argmin(np.abs(bands.grid[:, 0] - xi1)))
    row = " ".join(f"{e:+.4f}" for e in bands.sheets[i])
    print(f"xi1={xi1:+.2f}: {row}")

for ell in (0, 1):
    gap, radius = ring_gap(model, ell)
    print(f"ring {ell}: full gap {gap:.5f} at |xi| = {radius:.4f}")

print("ring-1 gap against eps:")
for eps in (0.05, 0.1, 0.2):
    print(f"  eps={eps:.2f}  gap={ring_gap(ReplicaModel(1, 1.0, eps), 1)[0]:.6f}")
