"""Weighted least-squares height on a 3 x 4 raster, 40 digits.

Forward differences, backward at the far edge. Each pixel carries two rows
b . grad z = h with weights 1 and 2 (a weight multiplies its row). The pixel
nearest the domain centroid, (1, 1) with the lowest index on ties, is pinned
to zero; the rest solves the normal equations exactly.
"""
from mpmath import mp, mpf, matrix, lu_solve, sin, cos

mp.dps = 40
W, H = 3, 4
PIN = 1 * W + 1


def rows_at(p):
    return [(mpf(1), mpf("0.5"), mpf("0.3") * sin(p + 1), mpf(1)),
            (mpf("-0.2"), mpf(1), mpf("0.4") * cos(2 * p), mpf(2))]


def grad_rows(p):
    x, y = p % W, p // W
    gx = {p + 1: 1, p: -1} if x + 1 < W else {p: 1, p - 1: -1}
    gy = {p + W: 1, p: -1} if y + 1 < H else {p: 1, p - W: -1}
    return gx, gy


def solve():
    n = W * H
    A, h = [], []
    for p in range(n):
        gx, gy = grad_rows(p)
        for bx, by, hv, w in rows_at(p):
            row = [mpf(0)] * n
            for k, v in gx.items():
                row[k] += w * bx * v
            for k, v in gy.items():
                row[k] += w * by * v
            A.append(row)
            h.append(w * hv)
    keep = [k for k in range(n) if k != PIN]
    m = len(keep)
    N = matrix(m, m)
    r = matrix(m, 1)
    for i, row in enumerate(A):
        for a, ka in enumerate(keep):
            r[a] += row[ka] * h[i]
            for b, kb in enumerate(keep):
                N[a, b] += row[ka] * row[kb]
    zr = lu_solve(N, r)
    z = [mpf(0)] * n
    for a, ka in enumerate(keep):
        z[ka] = zr[a]
    return z


if __name__ == "__main__":
    print(", ".join(mp.nstr(v, 20) for v in solve()))
