"""Library tour on the bundled Xe2 model (about 20 s on one core).

    python demos/api_tour.py
"""
import math

import refpot
from refpot import jost, phaseshift


pot = refpot.load_config(refpot.bundled_config("xe2"))
print(f"V(0) = {pot.v_zero:.6e} meV, C = {pot.c_const:.12g} meV A^2")

spec = refpot.norming_constants(pot, refpot.find_eigenvalues(pot))
print(f"{len(spec)} bound states")
for s in spec.states[:3] + spec.states[-2:]:
    print(f"  n={s.n:2d}  E={s.energy:+.6f} meV  ln C_n={s.log_norming:.2f}")

for k in (1e-3, 1.0, 1e3, 1e5):
    print(f"delta({k:g}) = {refpot.phase_shift(pot, k):+.9f} rad")

coeffs = phaseshift.series_coefficients(pot)
print("a1, a3, a5 =", ", ".join(f"{coeffs[n]:.6e}" for n in (1, 3, 5)))
asy = jost.asymptotics_from_potential(pot)
print(f"ln|F| ~ a2/k^2 + a4/k^4 with a2 = {asy.a2:.6e}, a4 = {asy.a4:.6e}")

F = jost.jost_direct(pot, 1.0)
print(f"F(k=1): ln|F| = {F.log_modulus:.6f}, arg F + delta = "
      f"{math.remainder(F.arg + refpot.phase_shift(pot, 1.0), 2 * math.pi):.2e}")
