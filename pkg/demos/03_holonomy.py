"""Holonomy of leaves: the Reeb torus contracts, a shear gives one-sided holonomy."""

import math

import numpy as np

from contactkit.perturb import shear_annulus, shear_foliation
from contactkit.planefields import example
from contactkit.surfdyn import classify_holonomy, holonomy_return_map, reeb_annulus

pf = example("reeb")
rm = holonomy_return_map(pf, reeb_annulus(pf))
cls = classify_holonomy(rm)
print(f"Reeb torus leaf: phi'(0) = {rm.derivative:.12f}  (e^-1 = {math.exp(-1):.12f})")
print(f"  labels {cls.labels}, phi(0) = {rm.phi0:.1e}")

twice = holonomy_return_map(pf, reeb_annulus(pf), loops=2)
print(f"  two loops vs composing one loop: max diff {np.max(np.abs(twice.y - rm(rm.y))):.1e}")

pf = shear_foliation()
seeds = np.linspace(-0.015, 0.015, 41)
for z0 in (0.0, 0.5):
    for direction in (1, -1):
        rm = holonomy_return_map(pf, shear_annulus(pf, z0, 0.1), direction=direction, seeds=seeds)
        cls = classify_holonomy(rm)
        d = {k: round(v, 5) for k, v in cls.side_derivatives.items()}
        print(f"shear loop z = {z0}, direction {direction:+d}: sides {cls.sides}, one-sided derivatives {d}")
