import numpy as np
import pytest

from twistfock.conjugate import omega
from twistfock.errors import ShapeMismatch, SizeCapExceeded, TruncationTooSmall
from twistfock.fock import (FockOperator, FockVector, apply_P, inverse_kernel_norm, kernel_matrices, ladder,
                            level_norm, operator_norm, preservation, solve_P, twisted_adjoint, twisted_inner,
                            twisted_norm, vacuum_moment)
from twistfock.hilbert import REAL_ORTHONORMAL, tracial_subspace
from twistfock.twist import make_twist
from twistfock.wick import NCPolynomial, apply_to_vacuum

from conftest import DIM2, dim2_twist, family_cases, nontracial, permutation_kernel, rand_complex

CASES = family_cases()


def rand_fock(rng, d, N):
    return FockVector(d, [rand_complex(rng, d ** n) for n in range(N + 1)])


def test_zero_twist_kernels():
    H = tracial_subspace(2)
    T = make_twist("q-flip", {"q": 0.0}, H)
    for n in range(5):
        R, P = kernel_matrices(T, n)
        assert np.array_equal(R, np.eye(2 ** n)) and np.array_equal(P, np.eye(2 ** n))


@pytest.mark.parametrize("d,nmax", [(1, 5), (2, 5), (3, 4)])
def test_qflip_permutation_oracle(d, nmax):
    for q in (0.2, 0.5, 0.9):
        T = make_twist("q-flip", {"q": q, "d": d})
        for n in range(1, nmax + 1):
            assert np.abs(kernel_matrices(T, n)[1] - permutation_kernel(q, d, n)).max() < 1e-10


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_kernel_structure(case, rng):
    _, H, T = case
    for n in range(2, 6):
        R, P = kernel_matrices(T, n)
        Pprev = kernel_matrices(T, n - 1)[1]
        assert np.abs(P - P.conj().T).max() < 1e-12
        assert np.abs(P - R.conj().T @ np.kron(np.eye(2), Pprev)).max() < 1e-12
        X = rand_complex(rng, 3, 2 ** n)
        assert np.abs(apply_P(T, X, n) - X @ P.T).max() < 1e-12
        assert np.abs(apply_P(T, solve_P(T, X, n), n) - X).max() < 1e-10
        assert np.abs(solve_P(T, X[0], n, dense_cap=0) - solve_P(T, X[0], n)).max() < 1e-9


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_inverse_kernel_bound(case):
    _, H, T = case
    w = omega(T.q)
    for n in range(1, 7):
        assert inverse_kernel_norm(T, n) <= w ** (-n) * (1 + 1e-8)


def test_size_cap():
    T = make_twist("q-flip", {"q": 0.3, "d": 2})
    with pytest.raises(SizeCapExceeded):
        kernel_matrices(T, 7, size_cap=2 ** 12)


def test_inner_product_examples(rng):
    H, T = dim2_twist("anti")
    vac = FockVector.vacuum(2, 3)
    assert twisted_inner(vac, vac, T) == pytest.approx(1.0)
    Z = make_twist("q-flip", {"q": 0.0}, H)
    f, g = rand_fock(rng, 2, 3), rand_fock(rng, 2, 3)
    plain = sum(np.vdot(a, b) for a, b in zip(f.levels, g.levels))
    assert twisted_inner(f, g, Z) == pytest.approx(plain)
    assert twisted_inner(f, g, T) == pytest.approx(np.conj(twisted_inner(g, f, T)))
    assert twisted_norm(f, T) > 0
    q = 0.4
    T1 = make_twist("q-flip", {"q": q, "d": 1})
    ee = FockVector.from_tensor([1.0], 2, 1)
    assert twisted_inner(ee, ee, T1) == pytest.approx(1 + q)
    with pytest.raises(ShapeMismatch):
        twisted_inner(f, FockVector.vacuum(2, 4), T)
    with pytest.raises(TruncationTooSmall):
        FockVector.from_tensor(np.ones(8), 3, 2, N=2)


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_ladder_examples(case, rng):
    _, H, T = case
    N = 4
    vac = FockVector.vacuum(2, N)
    h = rand_complex(rng, 2)
    assert (ladder("annihilate", h, N, T) @ vac).max_abs() == 0
    for a in range(2):
        for b in range(2):
            xi, eta = H.basis[:, a], H.basis[:, b]
            v = ladder("field", xi, N, T, H) @ (ladder("field", eta, N, T, H) @ vac)
            assert v.levels[0][0] == pytest.approx(np.vdot(H.S(xi), eta))
            assert np.allclose(v.levels[2], np.kron(xi, eta))


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_creation_bound(case, rng):
    _, H, T = case
    q = T.q
    N = 6
    for _ in range(3):
        h = rand_complex(rng, 2)
        A = ladder("create", h, N, T)
        for n in range(N):
            bound = sum(q ** i for i in range(n + 1)) * np.linalg.norm(h)
            assert level_norm(A, n, T) <= bound + 1e-8


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_preservation_bounds(case, rng):
    _, H, T = case
    q = T.q
    N = 6
    A = rand_complex(rng, 2, 2)
    L = preservation(A, N, T)
    for n in range(1, N + 1):
        assert level_norm(L, n, T) <= np.linalg.norm(A, 2) * sum(q ** i for i in range(n + 1)) + 1e-8
    if H.is_tracial:
        Q = np.diag([1.0, 0.0])
        LQ = preservation(Q, N, T)
        e = np.eye(2)[0]
        number = ladder("create", e, N, T) @ ladder("annihilate", e, N, T)
        assert number.max_abs_difference(LQ) < 1e-12
        assert operator_norm(LQ, T) <= 1 / (1 - q) + 1e-8


def test_preservation_identity_free():
    T = make_twist("q-flip", {"q": 0.0, "d": 2})
    L = preservation(np.eye(2), 4, T)
    assert L.max_abs_difference(FockOperator.identity(2, 4) - FockOperator(2, 4, {(0, 0): np.eye(1)})) == 0


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_twisted_adjoint(case, rng):
    _, H, T = case
    N = 4
    h = rand_complex(rng, 2)
    cr = ladder("create", h, N, T)
    assert twisted_adjoint(cr, T).max_abs_difference(ladder("annihilate", h, N, T)) < 1e-9
    A = rand_complex(rng, 2, 2)
    adj = twisted_adjoint(preservation(A, N, T), T)
    assert adj.max_abs_difference(preservation(A.conj().T, N, T)) < 1e-9
    X = ladder("field", H.basis[:, 0], N, T, H) + preservation(A, N, T)
    f, g = rand_fock(rng, 2, N), rand_fock(rng, 2, N)
    Xd = twisted_adjoint(X, T)
    assert twisted_inner(f, X @ g, T) == pytest.approx(twisted_inner(Xd @ f, g, T), abs=1e-9)
    assert twisted_adjoint(Xd, T).max_abs_difference(X) < 1e-9


def test_twisted_adjoint_free(rng):
    T = make_twist("q-flip", {"q": 0.0, "d": 2})
    B = FockOperator(2, 3, {(2, 1): rand_complex(rng, 4, 2), (3, 3): rand_complex(rng, 8, 8)})
    adj = twisted_adjoint(B, T)
    assert np.array_equal(adj.block(1, 2), B.block(2, 1).conj().T)
    assert np.array_equal(adj.block(3, 3), B.block(3, 3).conj().T)


def test_vacuum_moment_examples():
    q = 0.35
    T1 = make_twist("q-flip", {"q": q, "d": 1})
    H1 = tracial_subspace(1)
    assert vacuum_moment((0, 0, 0, 0), H1, T1) == pytest.approx(2 + q)
    H, T = dim2_twist("mixed+")
    assert vacuum_moment((0, 1, 1), H, T) == 0
    with pytest.raises(TruncationTooSmall):
        vacuum_moment((0, 0, 0, 0), H, T, N=3)
    Hr = nontracial(REAL_ORTHONORMAL, lam=3.0)
    Tr = make_twist("q-flip", {"q": 0.3}, Hr)
    A = Hr.quasi_free_matrix
    C = 2 * np.linalg.inv(np.eye(2) + A)
    for k in range(2):
        for j in range(2):
            assert vacuum_moment((k, j), Hr, Tr) == pytest.approx(C[j, k], abs=1e-12)


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_two_point_and_energy_cap(case, rng):
    _, H, T = case
    for a in range(2):
        for b in range(2):
            assert vacuum_moment((a, b), H, T) == pytest.approx(np.vdot(H.S(H.basis[:, a]), H.basis[:, b]))
    for _ in range(5):
        w = tuple(rng.integers(0, 2, size=4))
        assert vacuum_moment(w, H, T, N=4) == pytest.approx(vacuum_moment(w, H, T, N=6), abs=1e-12)


def _vacuum_rank(H, T, deg=3):
    words = [()] + [tuple(w) for k in range(1, deg + 1) for w in np.ndindex(*(H.d,) * k)]
    cols = []
    for w in words:
        v = apply_to_vacuum(NCPolynomial(H.d, {w: 1.0}), H, T, N=deg)
        cols.append(np.concatenate(v.levels))
    return np.linalg.matrix_rank(np.array(cols)), len(words)


@pytest.mark.parametrize("name", list(DIM2))
def test_vacuum_separating(name):
    H, T = dim2_twist(name)
    rank, total = _vacuum_rank(H, T)
    assert rank == total


def test_vacuum_separating_random_sample(rng):
    H = tracial_subspace(3)
    T = make_twist("q-flip", {"q": 0.9}, H)
    words = [()] + [tuple(w) for k in range(1, 4) for w in np.ndindex(*(3,) * k)]
    coeffs = rand_complex(rng, 20, len(words))
    vecs = []
    for row in coeffs:
        v = apply_to_vacuum(NCPolynomial(3, dict(zip(words, row))), H, T, N=3)
        vecs.append(np.concatenate(v.levels))
    assert np.linalg.matrix_rank(np.array(vecs)) == 20


def test_operator_algebra(rng):
    H, T = dim2_twist("diag")
    N = 3
    A, B, C = (ladder("field", rand_complex(rng, 2), N, T, H) for _ in range(3))
    f = rand_fock(rng, 2, N)
    assert ((A @ B) @ C).max_abs_difference(A @ (B @ C)) < 1e-12
    assert ((A @ B) @ f - A @ (B @ f)).max_abs() < 1e-12
    assert ((A + B) * 2.0 - A * 2.0 - B * 2.0).max_abs_difference(FockOperator(2, N)) < 1e-12
    with pytest.raises(ShapeMismatch):
        A @ FockVector.vacuum(2, 4)
