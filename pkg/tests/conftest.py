import itertools
import sys

import numpy as np
import pytest

from twistfock.hilbert import REAL_ORTHONORMAL, build_standard_subspace, tracial_subspace
from twistfock.twist import make_twist

# d = 2 tracial families, parameters chosen with ‖T‖ <= 0.5
DIM2 = {
    "diag": {"family": "diag", "params": [0.3, 0.2, -0.25]},
    "anti": {"family": "anti", "params": [0.2, 0.25]},
    "mixed+": {"family": "mixed", "params": [0.3, -0.1], "epsilon": 1},
    "mixed-": {"family": "mixed", "params": [0.2, 0.25], "epsilon": -1},
}


def dim2_twist(name, H=None):
    H = tracial_subspace(2) if H is None else H
    return H, make_twist("dim2", DIM2[name], H)


def nontracial(basis_mode="complex-linear", lam=2.0):
    return build_standard_subspace(eigenvalues=[lam, 1 / lam], bar=[1, 0], basis_mode=basis_mode)


def family_cases(q=0.3):
    """(label, H, T) over the d = 2 families, tracial and nontracial q-flips."""
    out = [(name,) + dim2_twist(name) for name in DIM2]
    H = tracial_subspace(2)
    out.append(("qflip-tracial", H, make_twist("q-flip", {"q": q}, H)))
    for mode in ("complex-linear", REAL_ORTHONORMAL):
        H = nontracial(mode)
        out.append((f"qflip-{mode}", H, make_twist("q-flip", {"q": q}, H)))
    return out


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def permutation_kernel(q, d, n):
    """Brute-force sum over S_n of q^{inv(σ)} U_σ, U_σ permuting tensor slots."""
    dim = d ** n
    P = np.zeros((dim, dim))
    idx = np.array(list(itertools.product(range(d), repeat=n)))
    weights = d ** np.arange(n - 1, -1, -1)
    for sigma in itertools.permutations(range(n)):
        inv = sum(1 for a in range(n) for b in range(a + 1, n) if sigma[a] > sigma[b])
        P[idx[:, list(sigma)] @ weights, idx @ weights] += q ** inv
    return P


QIJ_SPACE = dict(eigenvalues=[2.0, 0.5, 3.0, 1 / 3], bar=[1, 0, 3, 2])


def qij_relations_hold(Q, bar, tol=1e-10):
    d = len(bar)
    return all(abs(Q[i, j] - Q[bar[j], i]) < tol and abs(Q[i, j] - Q[bar[i], bar[j]]) < tol
               and abs(Q[i, j] - Q[j, bar[i]]) < tol for i in range(d) for j in range(d))


def symmetrized_qij(rng, bar, scale=0.6):
    """Random Hermitian q_ij with q_ij = q_{j̄i} = q_{īj̄} = q_{jī}, by averaging
    over the symmetry maps until only the invariant part survives."""
    b = np.array(bar)
    Q = rand_complex(rng, len(bar), len(bar))
    for _ in range(400):
        Q = (Q + Q[b, :].T + Q[np.ix_(b, b)] + Q[:, b].T + Q.conj().T) / 5
    return scale * Q / np.abs(Q).max()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
