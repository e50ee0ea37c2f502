"""Circular slits from a one-parameter family of drivings.

For each (C1, C2) the auxiliary (a, b) system is integrated, the slit is
pulled back from the half-plane, and its shape is checked against a circle
orthogonal to the unit circle. Writes slits.svg next to this script.

    python demos/circular_slits.py
"""

from pathlib import Path

import numpy as np

from valueregion.cli import slit_svg
from valueregion.slit import (
    CircularArcParams,
    build_chordal_frame,
    integrate_chordal,
    integrate_single_atom_disk,
    pullback,
    slit_geometry,
)

T = np.log(4)
print("T = ln 4, slit height sqrt(Q_T) and the tip in the disk")
for C1, C2 in ((1.0, 0.0), (-1.0, 0.0), (0.6, 0.5), (1.0, 1.0), (-0.8, -0.4)):
    g = slit_geometry(CircularArcParams(C1, C2), T)
    tip = f"{g.tip.real + 0.0:.6f}{round(g.tip.imag, 6) + 0.0:+.6f}i"
    print(f"C1={C1:+.1f} C2={C2:+.1f}: sqrt(Q_T)={np.sqrt(g.Q_T):.6f} tip={tip} "
          f"circle fit {g.circularity_residual():.1e}, orthogonality {g.orthogonality_defect():.1e}")

# the disk equation and the chordal equation tell the same story
p = CircularArcParams(0.6, 0.5)
d = p.driving(T)
frame = build_chordal_frame(d)
z = np.array([0.3j, -0.4 + 0.1j, 0.7])
disk = integrate_single_atom_disk(d, z)
chordal, _, _ = integrate_chordal(d, z, frame=frame)
print()
print(f"shift C = {frame.C_total:.6f}, chordal time {frame.tau_total:.6f}")
print(f"disk vs chordal endpoints differ by {np.max(np.abs(disk - chordal)):.1e}")

# running the flow backward from the slit lands on the unit circle
g = slit_geometry(p, T, n=12)
back = pullback(d, g.disk_samples[1:-1])
print(f"pulled-back slit points: 1 - |w| <= {np.max(1 - np.abs(back)):.1e}")

out = Path(__file__).with_name("slits.svg")
out.write_text(slit_svg(g))
print(f"wrote {out}")
