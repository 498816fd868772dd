"""Random instance generators shared by the test modules."""
import numpy as np


def rand_spd(rng, n, log_cond=2.0):
    """SPD matrix with a random orthogonal eigenbasis and condition up to ``10**log_cond``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = 10.0 ** rng.uniform(0.0, log_cond, n)
    A = (Q * w) @ Q.T
    return 0.5 * (A + A.T)


def rand_sym(rng, n):
    E = rng.standard_normal((n, n))
    return 0.5 * (E + E.T)


def rel_perturbation(rng, A, eta):
    """``dA`` with ``||L^{-1} dA L^{-T}||_2 == eta`` exactly (``A = L L^T``)."""
    n = A.shape[0]
    L = np.linalg.cholesky(A)
    E = rand_sym(rng, n)
    E /= np.linalg.norm(E, 2)
    dA = eta * (L @ E @ L.T)
    return 0.5 * (dA + dA.T)


def rand_pair(rng, n, log_cond=3.0):
    return rand_spd(rng, n, rng.uniform(0, log_cond)), rand_spd(rng, n, rng.uniform(0, log_cond))


def rand_orthonormal(rng, n, k):
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return Q


def rand_m_orthonormal(rng, M, k):
    """Basis with ``B^T M B = I``."""
    n = M.shape[0]
    L = np.linalg.cholesky(M)
    Q = rand_orthonormal(rng, n, k)
    return np.linalg.solve(L.T, Q)


def sparse_sym(seed, n):
    """Symmetric matrix with about 40% zeros and entries spanning 600 decades."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-300, 300, (n, n))
    A[rng.random((n, n)) < 0.4] = 0.0
    return np.tril(A) + np.tril(A, -1).T


def mutate_bytes(data, rng, count):
    """Apply ``count`` random byte edits: overwrite, insert, delete or duplicate."""
    data = bytearray(data)
    for _ in range(count):
        op = rng.integers(4)
        pos = int(rng.integers(len(data) + 1))
        if op == 0 and data:
            data[min(pos, len(data) - 1)] = int(rng.integers(256))
        elif op == 1:
            data.insert(pos, int(rng.choice(list(b"0123456789 -.eE%\n\t"))))
        elif op == 2 and data:
            del data[min(pos, len(data) - 1)]
        else:
            data[pos:pos] = bytes(data[max(0, pos - 8):pos])
    return bytes(data)
