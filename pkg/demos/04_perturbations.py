"""Turning foliations into contact structures with explicit local perturbations."""

import numpy as np

from contactkit import expr as ex
from contactkit.perturb import (
    holonomy_contactize,
    interp_chart,
    interpolate_plane_fields,
    monotone_graph_diffeo,
    pulled_back_slope,
    tangent_arc_contactize,
)

r = tangent_arc_contactize("pos(y - 1/2)^3")
print(f"tangent arc: {r.before.verdict} -> {r.after.verdict} on the interior (t = {r.value})")

r = holonomy_contactize("-z")
print(f"holonomy loop: {r.before.verdict} -> {r.after.verdict} on y^2 + z^2 < 0.95, "
      f"min density {r.after.min_density:.2e}")

# Slopes pulled back through z -> f(z) grow, so the interpolation between
# the two is increasing in y and therefore contact.
d = monotone_graph_diffeo(["z", "z + z^3"])
print(f"monotone diffeo f(z) = z - c sigma(z) with c = {d.c}, min gap {d.min_gap:.3e}")
chart = interp_chart()
a0 = ex.parse_expr("-z", chart)
r = interpolate_plane_fields(a0, pulled_back_slope(a0, d, chart), chart)
print(f"interpolating -z to its pulled-back slope: {r.after.verdict} for |y| < 1/2")

zs = np.linspace(-1, 1, 5)
print("  f on a few points:", np.round(d(zs), 4))
