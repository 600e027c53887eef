"""Least-squares albedo from two Lambertian observations by direct minimisation."""
from mpmath import mp, mpf, sqrt, diff, findroot

mp.dps = 40


def unit(v):
    n = sqrt(sum(mpf(c) ** 2 for c in v))
    return [mpf(c) / n for c in v]


N = unit(["-0.3", "0.2", "1"])
S, T = unit([1, 0, 5]), unit([-1, -2, 7])
I1, I2 = mpf("0.61"), mpf("0.57")


def cost(g):
    ns = sum(a * b for a, b in zip(N, S))
    nt = sum(a * b for a, b in zip(N, T))
    return (I1 - g * ns) ** 2 + (I2 - g * nt) ** 2


if __name__ == "__main__":
    g = findroot(lambda u: diff(cost, u), mpf("0.5"))
    print("gamma", mp.nstr(g, 20))
