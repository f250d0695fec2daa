"""Independent reference implementations used by the tests.

Written from the invariant equations alone, in mpmath at 50 digits, and
solved by plain bisection. Nothing here imports the package.
"""

import mpmath as mp

mp.mp.dps = 50


def curve_k(reserves, d, amplification, gamma=None):
    n = len(reserves)
    prod = mp.fprod(mp.mpf(x) for x in reserves)
    k0 = prod * mp.mpf(n) ** n / mp.mpf(d) ** n
    if gamma is None:
        return amplification * k0
    g = mp.mpf(gamma)
    return amplification * k0 * g ** 2 / (g + 1 - k0) ** 2


def curve_lhs_minus_rhs(reserves, d, amplification, gamma=None):
    """K D^{N-1} sum(x) + prod(x) - K D^N - (D/N)^N."""
    n = len(reserves)
    d = mp.mpf(d)
    xs = [mp.mpf(x) for x in reserves]
    k = curve_k(xs, d, amplification, gamma)
    return k * d ** (n - 1) * mp.fsum(xs) + mp.fprod(xs) - k * d ** n - (d / n) ** n


def bisect(f, lo, hi, iters=400):
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    flo = f(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def oracle_d(reserves, amplification, gamma=None):
    """D on the branch between min(x)*N and sum(x)."""
    n = len(reserves)
    lo = min(reserves) * n * (1 - mp.mpf(10) ** -30)
    hi = sum(reserves) * (1 + mp.mpf(10) ** -30)
    return bisect(lambda d: curve_lhs_minus_rhs(reserves, d, amplification, gamma), lo, hi)


def oracle_balance(reserves, index, d, amplification, gamma=None):
    """Balance of token ``index`` that puts the pool back on the curve for fixed D."""
    def f(y):
        xs = list(reserves)
        xs[index] = y
        return curve_lhs_minus_rhs(xs, d, amplification, gamma)
    return bisect(f, mp.mpf(10) ** -40 * d, d * 10)


def oracle_swap_out(reserves, i, j, dx, amplification, gamma=None):
    d = oracle_d(reserves, amplification, gamma)
    xs = [mp.mpf(x) for x in reserves]
    xs[i] += mp.mpf(dx)
    return xs[j] - oracle_balance(xs, j, d, amplification, gamma)


def rel(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    if b == 0:
        return abs(a)
    return abs(a - b) / abs(b)
