"""Symplectic forms near a taut foliation and around the round sphere."""

from contactkit.forms import pullback
from contactkit.planefields import example
from contactkit.symplectic import (
    check_dilating,
    induced_boundary_form,
    polar_r4,
    standard_r4,
    taut_t3_example,
    weak_domination_check,
    weak_filling_form,
)

alpha, v, Omega = taut_t3_example()
for eps in (1.0, 0.25, 0.0):
    cert = weak_filling_form(alpha, v, Omega, eps=eps)
    print(f"T^3 x [-1,1], eps = {eps}: omega = {cert.omega.to_text()}")
    print(f"    valid {cert.valid}, omega^omega in [{cert.omega_squared_min}, {cert.omega_squared_max}]")

chart, omega, radial = standard_r4()
print(f"\nradial field dilates dx1^dy1 + dx2^dy2: {check_dilating(radial, omega).ok}")

polar, omega, radial, sphere = polar_r4()
b = induced_boundary_form(radial, omega, sphere)
print(f"induced form on the unit sphere: {b.alpha.to_text()}")
print(f"    {b.report.verdict}, min density {b.report.min_density:.5f}")
dom = weak_domination_check(pullback(sphere, omega), example("s3"))
print(f"    omega restricted to the contact planes is positive: {dom.ok} (min {dom.minimum:.5f})")
