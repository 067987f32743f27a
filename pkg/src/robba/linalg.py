"""Certified linear algebra modulo p^K.

All solvers work over Z/p^K with explicit valuation-aware pivoting; the
callers translate p-adic data into integer matrices (scaling rows so all
entries are integral) and re-certify any answer against the original
exact data.  Kernels are computed through a Howell-style reduction, which
is complete over the chain ring Z/p^K.
"""
from __future__ import annotations

from .padics import vp_int


def _val(x, p, K):
    return K if x == 0 else min(vp_int(x, p), K)


def howell_kernel(rows, ncols, p, K):
    """Generators of {x in (Z/p^K)^ncols : M x = 0 mod p^K}.

    ``rows`` is the list of matrix rows (each of length ncols).  Returns a
    list of integer vectors; every kernel element mod p^K is a Z/p^K-linear
    combination of them.
    """
    mod = p ** K
    nrows = len(rows)
    # work rows: [column j of M | e_j], so left block width = nrows
    work = []
    for j in range(ncols):
        left = [rows[i][j] % mod for i in range(nrows)]
        right = [0] * ncols
        right[j] = 1
        work.append(left + right)

    width = nrows + ncols
    pivoted = []
    pool = work
    for col in range(nrows):
        # pick the pool row with minimal valuation at this column
        best, bestv = None, K
        for idx, r in enumerate(pool):
            v = _val(r[col], p, K)
            if v < bestv:
                best, bestv = idx, v
        if best is None:
            continue
        piv = pool.pop(best)
        v = bestv
        u = piv[col] // p ** v
        uinv = pow(u, -1, mod)
        piv = [x * uinv % mod for x in piv]   # pivot entry now p^v
        if v > 0:
            # Howell shadow: p^(K-v) * pivot has zero pivot entry but may
            # contribute to the kernel through later columns
            shadow = [x * p ** (K - v) % mod for x in piv]
            if any(shadow):
                pool.append(shadow)
        step = p ** v
        for r in pool:
            if r[col]:
                f = r[col] // step
                for t in range(col, width):
                    if piv[t]:
                        r[t] = (r[t] - f * piv[t]) % mod
        pivoted.append((col, v, piv))

    gens = []
    for r in pool:
        vec = r[nrows:]
        if any(vec):
            gens.append(vec)
    return gens


def solve_mod(rows, rhs, p, K):
    """One solution of M x = rhs mod p^K, or None if none exists at this
    precision.  Gaussian elimination with minimal-valuation pivoting."""
    mod = p ** K
    m = [list(r) + [b % mod] for r, b in zip(rows, rhs)]
    nrows, ncols = len(rows), len(rows[0]) if rows else 0
    pivots = []
    used = set()
    for _ in range(min(nrows, ncols)):
        best = None
        bestv = K
        for i in range(nrows):
            if i in used:
                continue
            for j in range(ncols):
                v = _val(m[i][j], p, K)
                if v < bestv:
                    best, bestv = (i, j), v
        if best is None:
            break
        i0, j0 = best
        used.add(i0)
        v = bestv
        u = m[i0][j0] // p ** v
        uinv = pow(u, -1, mod)
        m[i0] = [x * uinv % mod for x in m[i0]]
        step = p ** v
        for i in range(nrows):
            if i not in used and m[i][j0]:
                # pool rows have valuation >= v here (v was the global min)
                f = m[i][j0] // step
                m[i] = [(a - f * b) % mod for a, b in zip(m[i], m[i0])]
        pivots.append((i0, j0, v))

    x = [0] * ncols
    # row t has zeros at pivot columns processed before t, so substitute
    # in reverse processing order; free columns stay 0
    for i0, j0, v in reversed(pivots):
        acc = m[i0][ncols]
        for j in range(ncols):
            if j != j0 and m[i0][j]:
                acc = (acc - m[i0][j] * x[j]) % mod
        if acc % p ** v:
            return None
        x[j0] = acc // p ** v
    # consistency of non-pivot rows
    for i in range(nrows):
        if i in used:
            continue
        acc = m[i][ncols]
        for j in range(ncols):
            acc = (acc - m[i][j] * x[j]) % mod
        if acc % mod:
            return None
    return x


def matvec_mod(rows, x, p, K):
    mod = p ** K
    return [sum(a * b for a, b in zip(r, x)) % mod for r in rows]


def solve_padic_columns(cols, rhs, p, prec, denom_cap=64):
    """Solve sum_j y_j col_j = rhs over Q_p, columns given as lists of
    PadicScalar.  The unknown may have bounded denominators: p^s2 * y is
    solved integrally, doubling s2 up to denom_cap.  Returns a list of
    PadicScalar (known modulo p^(K - s2) from an exact solve mod p^K),
    or None.
    """
    from .padics import PadicScalar

    nrows = len(cols[0])
    shift = 0
    for col in cols + [rhs]:
        for c in col:
            if not c.is_zero():
                shift = max(shift, -c.vord)
    s2 = 2
    while s2 <= denom_cap:
        K = 2 * prec + shift + 2 * s2 + 2
        mod = p ** K
        rows = [[0] * len(cols) for _ in range(nrows)]
        for j, col in enumerate(cols):
            for i, c in enumerate(col):
                if not c.is_zero():
                    rows[i][j] = c.unit * p ** (c.vord + shift) % mod
        b = [0] * nrows
        for i, c in enumerate(rhs):
            if not c.is_zero():
                b[i] = c.unit * p ** (c.vord + shift + s2) % mod
        sol = solve_mod(rows, b, p, K)
        if sol is not None:
            out = []
            for y in sol:
                if y == 0:
                    out.append(PadicScalar.zero(p, K - s2))
                else:
                    out.append(PadicScalar(p, y, -s2, K - s2))
            return out
        s2 *= 2
    return None
