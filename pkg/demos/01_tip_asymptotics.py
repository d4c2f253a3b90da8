"""
Tip asymptotics of the cone Laplacian
=====================================

From the cross-section spectrum to the functions a domain may add at the tip.
Run with ``python demos/01_tip_asymptotics.py``.
"""

# %%
# The cross-section: an interval of length pi with Neumann ends.  Its
# eigenvalues are -j^2 and every mode contributes two exponents q with
# q^2 - (n-1) q + lambda_j = 0.
import math

import numpy as np

from conewedge.cross_section import fd_spectrum, interval_spectrum, warp_family
from conewedge.indicial import all_roots, gamma_window, pole_window

spec = interval_spectrum(math.pi, "neumann", 8)
print("eigenvalues      ", spec.eigenvalues[:5])
print("fd oracle (2000) ", np.round(fd_spectrum(math.pi, "neumann", 2000, 5).eigenvalues, 5))
for r in all_roots(spec)[:5]:
    print(f"  mode {r.mode}: q = {r.q:+.0f}  pole order {r.pole_order}")

# %%
# A weight gamma = delta - 1 selects the strip of exponents the domain can
# see.  delta must avoid the roots, here it ranges over (0, 1).
gw = gamma_window(spec)
print("admissible delta in (0, %g), excluded %s" % (gw.delta_max, list(gw.excluded)))
win = pole_window(spec, gw.check(0.5))
print("window", (win.lower, win.upper), "holds q =", win.values())

# %%
# Residues of the inverse symbol give the asymptotic functions.  At the double
# root q = 0 they are 1 and log x; with no warp the model cone and the
# full cone agree and theta is the identity.
from conewedge.mellin_symbolic import ConormalData, F_sigma

data = ConormalData(spec, warp_family(0.0, spec), gw.check(0.5))
fs = F_sigma(0.0, data)
print("F_0    :", fs.F_basis)
print("theta_0:\n", np.real(fs.theta))

# %%
# Now warp the cone, phi(x) = 1 + x, on an interval of length pi/2.  For
# delta > 1 one Taylor correction of the metric reaches the window and the
# logarithm picks up an x-term.
half = interval_spectrum(math.pi / 2, "neumann", 8)
warped = ConormalData(half, warp_family(1.0, half), gamma_window(half).check(1.5))
fw = F_sigma(0.0, warped)
print("mu_sigma       :", fw.mu_sigma)
print("full cone  F_0 :", fw.F_basis)
print("model cone     :", fw.Fhat_basis)

# %%
# Check the sign of that x-term straight from the operator.  On mode 0,
# x^2 Delta = (x d/dx)^2 + H(x) x d/dx with H = x phi'/phi.  For
# u = log x + a x the bracket is (a + 1) x + O(x^2), so only a = -1 keeps
# Delta u bounded at the tip.
x = np.logspace(-6, -2, 5)
for a in (-1.0, 1.0):
    lap = (a * x + x / (1 + x) * (1 + a * x)) / x**2
    print(f"a = {a:+.0f}:  Delta u at x = 1e-6 .. 1e-2 ->", np.round(lap, 3))
