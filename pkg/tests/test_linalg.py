import itertools
import random

from robba.linalg import howell_kernel, matvec_mod, solve_mod


def brute_kernel(rows, ncols, p, K):
    mod = p ** K
    out = []
    for vec in itertools.product(range(mod), repeat=ncols):
        if all(sum(r[j] * vec[j] for j in range(ncols)) % mod == 0
               for r in rows):
            out.append(list(vec))
    return out


def in_span(vec, gens, p, K):
    mod = p ** K
    if not gens:
        return all(x % mod == 0 for x in vec)
    rows = [[g[i] for g in gens] for i in range(len(vec))]
    return solve_mod(rows, vec, p, K) is not None


def test_kernel_complete_small():
    rng = random.Random(23)
    p, K = 3, 2
    for _ in range(40):
        nr, nc = rng.randint(1, 2), rng.randint(1, 3)
        rows = [[rng.randrange(p ** K) for _ in range(nc)]
                for _ in range(nr)]
        gens = howell_kernel(rows, nc, p, K)
        for g in gens:
            assert all(x % p ** K == 0 for x in matvec_mod(rows, g, p, K))
        for v in brute_kernel(rows, nc, p, K):
            assert in_span(v, gens, p, K), (rows, v, gens)


def test_solve_mod_random():
    rng = random.Random(29)
    p, K = 3, 6
    mod = p ** K
    for _ in range(60):
        n = rng.randint(1, 5)
        rows = [[rng.randrange(mod) for _ in range(n)] for _ in range(n)]
        x = [rng.randrange(mod) for _ in range(n)]
        b = matvec_mod(rows, x, p, K)
        sol = solve_mod(rows, b, p, K)
        assert sol is not None
        assert matvec_mod(rows, sol, p, K) == b


def test_solve_mod_inconsistent():
    assert solve_mod([[3], [0]], [1, 1], 3, 4) is None
