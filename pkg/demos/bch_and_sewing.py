"""Factor a product of Virasoro exponentials, then sew two spheres whose
sewn coordinates realize that product and read off the central factor."""
from __future__ import annotations

from vocalc.moduli import ModuliElement, sew
from vocalc.series import ParameterRing
from vocalc.virasoro import bch_factorize, verify_bch

R = ParameterRing(("a1", "a2", "b1", "b2"), ("al",), 3)
a1, a2, b1, b2, al = (R.param(n) for n in ("a1", "a2", "b1", "b2", "al"))

fac = bch_factorize([a1, a2], [b1, b2], al, R.one(), weight_bound=8, degree_bound=3)
print("Psi_-1 =", fac.psi(-1))
print("Psi_0  =", fac.psi0)
print("Psi_1  =", fac.psi(1))
print("Gamma  =", fac.gamma)
print("residual:", verify_bch(fac, [a1, a2], [b1, b2], al, R.one()) or "none")

# the same data as a sewing of two K*(1) elements
Q1 = ModuliElement.kstar(R, (), [(), (al, (a1, a2))])
Q2 = ModuliElement.kstar(R, (), [(b1, b2), (1, ())])
res = sew(Q1, Q2, 1, order=8)
print("sewn element:", res.element)
print("central factor matches:", res.gamma == fac.gamma)
