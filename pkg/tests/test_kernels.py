import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistfock import kernels
from twistfock.matchings import enumerate_matchings, plan_steps

from conftest import rand_complex

BACKENDS = sorted(kernels.BACKENDS)
needs_compiled = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")


def slot_op(op, d, n, k):
    return np.kron(np.kron(np.eye(d ** (k - 1)), op), np.eye(d ** (n - k - 1)))


@pytest.mark.parametrize("name", BACKENDS)
def test_two_site_dense_oracle(name, rng):
    be = kernels.get_backend(name)
    for d in (1, 2, 3):
        for n in range(2, 5):
            op = rand_complex(rng, d * d, d * d)
            x = rand_complex(rng, 3, d ** n)
            for k in range(1, n):
                assert np.abs(be.apply_two_site(x, d, n, k, op) - x @ slot_op(op, d, n, k).T).max() < 1e-12


@pytest.mark.parametrize("name", BACKENDS)
def test_contract_insert_adjoint(name, rng):
    be = kernels.get_backend(name)
    d, n = 2, 5
    c = rand_complex(rng, d * d)
    x = rand_complex(rng, 2, d ** n)
    for k in range(1, n):
        C = slot_op(c.reshape(1, -1), d, n, k)
        assert np.abs(be.contract(x, d, n, k, c) - x @ C.T).max() < 1e-12
        y = rand_complex(rng, 2, d ** (n - 2))
        lhs = np.vdot(be.contract(x, d, n, k, c)[0], y[0])
        rhs = np.vdot(x[0], be.insert(y, d, n - 2, k, np.conj(c))[0])
        assert lhs == pytest.approx(rhs)


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(2, 6), st.integers(0, 2 ** 32 - 1), st.booleans())
def test_backend_parity(d, n, seed, sparse):
    rng = np.random.default_rng(seed)
    if d ** n > 800:
        n = 4
    op = rand_complex(rng, d * d, d * d)
    if sparse:
        op[np.abs(op) < 1.0] = 0
    c = rand_complex(rng, d * d)
    x = rand_complex(rng, 2, d ** n)
    py, cy = kernels.get_backend("numpy"), kernels.get_backend("cython")
    k = int(rng.integers(1, n))
    assert np.abs(py.apply_two_site(x, d, n, k, op) - cy.apply_two_site(x, d, n, k, op)).max() < 1e-12
    assert np.abs(py.contract(x, d, n, k, c) - cy.contract(x, d, n, k, c)).max() < 1e-12
    assert np.abs(py.insert(x, d, n, k, c) - cy.insert(x, d, n, k, c)).max() < 1e-12


@needs_compiled
def test_plan_parity(rng):
    py, cy = kernels.get_backend("numpy"), kernels.get_backend("cython")
    d = 2
    t = rand_complex(rng, 4, 4)
    c = rand_complex(rng, 4)
    for n in range(2, 8):
        for pi in enumerate_matchings(n)[::3]:
            if not pi.num_pairs:
                continue
            steps = np.array(plan_steps(pi), dtype=np.int64).reshape(-1, 3)
            x = rand_complex(rng, 3, d ** n)
            a, b = py.apply_plan(x, d, n, steps, t, c), cy.apply_plan(x, d, n, steps, t, c)
            assert np.abs(a - b).max() < 1e-12 * max(1.0, np.abs(a).max())
            y = rand_complex(rng, 3, d ** pi.num_singletons)
            a = py.apply_plan_adjoint(y, d, n, steps, t.conj().T.copy(), np.conj(c))
            b = cy.apply_plan_adjoint(y, d, n, steps, t.conj().T.copy(), np.conj(c))
            assert np.abs(a - b).max() < 1e-12 * max(1.0, np.abs(a).max())


def test_plan_adjoint_pairing(rng):
    d, n = 2, 6
    t = rand_complex(rng, 4, 4)
    c = rand_complex(rng, 4)
    for pi in enumerate_matchings(n)[1::4]:
        steps = plan_steps(pi)
        x = rand_complex(rng, d ** n)
        y = rand_complex(rng, d ** pi.num_singletons)
        lhs = np.vdot(kernels.apply_plan(x, d, n, steps, t, c), y)
        rhs = np.vdot(x, kernels.apply_plan_adjoint(y, d, n, steps, t.conj().T, np.conj(c)))
        assert lhs == pytest.approx(rhs)


def test_single_and_batch_layout(rng):
    op = rand_complex(rng, 4, 4)
    X = rand_complex(rng, 3, 8)
    batch = kernels.apply_two_site(X, 2, 3, 2, op)
    single = kernels.apply_two_site(X[1], 2, 3, 2, op)
    assert single.shape == (8,) and np.array_equal(single, batch[1])


def test_backend_selection():
    assert kernels.get_backend() is kernels.BACKENDS[kernels.BACKEND]
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    env = dict(os.environ, TWISTFOCK_KERNELS="numpy")
    out = subprocess.run([sys.executable, "-c", "import twistfock; print(twistfock.KERNEL_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
