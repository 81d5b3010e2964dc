"""Check the coalgebra axioms on a group-like coalgebra, push it through the
geometric functor and read it back."""
from __future__ import annotations

import random

from vocalc import voc

V = voc.group_like_voc(2, random.Random(1))
print("coproduct rows [k, in_weight, in_index, out_weights, out_indices, coeff]:")
for row in V.entries():
    print("  ", row)

for name, r in voc.check_axioms(V).items():
    print(f"{name:14s} {r['status']}  ({r['checked']} coefficients)")

rep = voc.check_roundtrip_generators(V, order=8, degree=2)
for k, v in rep.items():
    print(f"{k:16s} {v if k == 'passed' else ('ok' if v is None else v)}")

bad = voc.mutate_delta(V, key=sorted(V.delta)[0])
print("after one coproduct entry is bumped:", voc.check_axioms(bad, only="counit")["counit"])
