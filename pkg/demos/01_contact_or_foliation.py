"""Which plane fields are contact? Classify the catalog and watch the 3-torus family.

The sign of alpha ^ d(alpha) decides: positive or negative contact, a
foliation when it vanishes, a confoliation when it vanishes only in places.
"""

import numpy as np

from contactkit.planefields import CATALOG, classify, example, normal_form

print("catalog on 41^3 grids")
for name in CATALOG:
    params = {"r_min": 0.1} if name == "lutz" else {}
    rep = classify(example(name, **params), 41)
    print(f"  {name:5s} {rep.verdict:22s} density in [{rep.min_density:+.4f}, {rep.max_density:+.4f}]")

# The torus family t cos(2 pi z) dx + t sin(2 pi z) dy + dz has constant
# density -2 pi t^2: it is a foliation only at t = 0.
print("\n3-torus family")
for t in np.linspace(-0.3, 0.3, 7):
    rep = classify(example("t3", t=float(t)), 11)
    print(f"  t = {t:+.2f}: {rep.verdict:18s} density {rep.min_density:+.5f}  (-2 pi t^2 = {-2 * np.pi * t * t:+.5f})")

# dz - a dx is contact exactly where a increases in y.
print("\nnormal forms dz - a dx")
for a in ["y", "y^3", "pos(y)^3", "-y", "y^2"]:
    print(f"  a = {a:9s} {classify(normal_form(a), 21).verdict}")
