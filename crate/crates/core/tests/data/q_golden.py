"""Exact rational expansion of the stored reflection series Q_4.

Medium a = [1, 1/4, 9/4, 1], so b = [1, 2, 2/3, 1] and d = [-1/3, 1/2, -1/5].
Writes the terms of total degree <= CAP in the text dump layout.
"""
from fractions import Fraction as F

CAP = 12
b = [F(1), F(2), F(2, 3), F(1)]
d = [(b[k] - b[k + 1]) / (b[k] + b[k + 1]) for k in range(3)]
m = 2


def mul(f, g):
    out = {}
    for j, x in f.items():
        for k, y in g.items():
            e = tuple(p + q for p, q in zip(j, k))
            if sum(e) <= CAP:
                out[e] = out.get(e, 0) + x * y
    return {e: c for e, c in out.items() if c != 0}


def beta(delta, w):
    # delta + (1 - delta²) w Σ (-delta w)^k, with w free of constants
    one = {(0,) * m: F(1)}
    out = {(0,) * m: delta}
    power = dict(w)
    while power:
        for e, c in power.items():
            out[e] = out.get(e, 0) + (1 - delta * delta) * c
        power = {e: -delta * c for e, c in mul(power, w).items()}
    return {e: c for e, c in out.items() if c != 0}


def shift(f, g):
    return {tuple(p + (1 if i == g else 0) for i, p in enumerate(e)): c for e, c in f.items()
            if sum(e) + 1 <= CAP}


q = {(0,) * m: -d[0]}
for k in (1, 2):
    q = beta(-d[k], shift(q, k - 1))
terms = sorted(q.items(), key=lambda t: (sum(t[0]), t[0][::-1]))
print(f"generators {m} cap {CAP} tail 0")
for e, c in terms:
    print(" ".join(map(str, e)) + f"  {float(c):.16e}  {0.0:.16e}")
