"""Characteristic foliation of a disk in a Lutz tube, flat and pushed.

The flat disk z = 0 is singular along whole circles; pushing it up a little
leaves a single elliptic point at the centre. Writes an SVG of each.
"""

import math
import sys

from contactkit.cli import foliation_svg
from contactkit.forms import parse_surface
from contactkit.planefields import example
from contactkit.surfdyn import characteristic_foliation

out = sys.argv[1] if len(sys.argv) > 1 else "."
pf = example("lutz")
domain = [(0.0, math.pi), (0.0, 2 * math.pi)]

for label, height in [("flat", "0"), ("pushed", "(1/100)*(pi^2 - u^2)")]:
    disk = parse_surface(f"u,v -> (u, v, {height})", pf.chart, domain, (False, True))
    fol = characteristic_foliation(pf, disk, seeds=16, max_steps=8000)
    print(f"{label} disk: {len(fol.singular)} singular point(s) after merging, "
          f"singular radius rows {fol.rows_with_singularities(0)}")
    for p in fol.singular[:3]:
        print(f"    r = {p.u:.4f}, theta = {p.v:.4f}, grid points merged: {p.multiplicity}")
    reasons = sorted({s.reason for s in fol.streamlines})
    print(f"    {len(fol.streamlines)} streamlines, stopped by {reasons}")
    path = f"{out}/lutz_{label}.svg"
    with open(path, "w") as fh:
        fh.write(foliation_svg(fol))
    print(f"    wrote {path}")
