"""A tour of one value region.

Builds the region for the base point i/2 and T = ln 4, walks along its two
boundary arcs, then throws random controls at it and reports where their
endpoints land.

    python demos/region_tour.py
"""

import numpy as np

from valueregion import RegionSpec
from valueregion.conformal import hyperbolic_automorphism, strip_map_inv
from valueregion.harness import ExperimentConfig, containment_experiment
from valueregion.region import Branch, a_pm, gamma_arc, julia_disks, omega0, omega_pm

spec = RegionSpec.from_disk(0.5j, np.log(4))
print(f"base point zeta0 = {spec.zeta0:.6f} in the strip, T = {spec.T:.6f}")

# the region lives between two heights; both arcs end at the same two corners
a_minus, a_plus = a_pm(spec)
w_minus, w_plus = omega_pm(spec)
print(f"sin x2 ranges over [{a_minus:.6f}, {a_plus:.6f}]")
print(f"corners: {w_minus:.6f} and {w_plus:.6f}")

for branch in Branch:
    arc = gamma_arc(spec, branch, 5)
    pts = ", ".join(f"{p.real:.4f}{p.imag:+.4f}i" for p in arc.points)
    print(f"{branch.value:>10}: {pts}")

# the automorphism translates the strip, so its value sits on the outer arc
auto = hyperbolic_automorphism(spec.T, 0.5j)
print(f"automorphism value {auto:.6f}, strip image {omega0(spec):.6f}")
print(f"  back in the disk: {strip_map_inv(omega0(spec)):.6f}")

d1, d2 = julia_disks(spec)
print(f"horodisk levels: D1 {d1.level:.6f} at {d1.sigma}, D2 {d2.level:.6f} at {d2.sigma}")

rep = containment_experiment(ExperimentConfig(spec, n_samples=2000, seed=7))
print()
print(rep.to_text(), end="")
print(f"closest endpoint to the base point: {rep.stats['min_distance_to_zeta0']:.4f}")
