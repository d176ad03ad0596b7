"""Acceptance suite: one check per criterion, each reported as a PASS/FAIL line.

Run with pytest (the lines are repeated in the terminal summary) or directly:

    python3 tests/test_acceptance.py
"""
import os
import sys
from math import factorial

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from twistfock.conjugate import conjugate_pairing, conjugate_variables, dq_wick, omega, word_tensor  # noqa: E402
from twistfock.contraction import c1_norm, twisted_contraction, w_norm_bound  # noqa: E402
from twistfock.fock import (FockVector, inverse_kernel_norm, kernel_matrices, ladder, level_norm,  # noqa: E402
                            operator_norm, preservation)
from twistfock.hilbert import build_standard_subspace, classify_factor_type, noninjectivity_criterion  # noqa: E402
from twistfock.hilbert import tracial_subspace  # noqa: E402
from twistfock.matchings import (D_p, D_p_inverse, IncompleteMatching, admissible_orders,  # noqa: E402
                                 crossing_numbers, d_s, d_s_inverse, dcp, dcp_inverse, enumerate_B,
                                 enumerate_matchings)
from twistfock.twist import Twist, commuting_residual, make_twist, validate_twist  # noqa: E402
from twistfock.wick import apply_to_vacuum, tensor_from_coeffs, wick_polynomial, wick_recursive  # noqa: E402

from conftest import (DIM2, QIJ_SPACE, dim2_twist, nontracial, permutation_kernel,  # noqa: E402
                      qij_relations_hold, rand_complex, symmetrized_qij)

RESULTS = {}


def record(number, title, passed, detail):
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return passed


def families():
    return [(name,) + dim2_twist(name) for name in DIM2]


def criterion_1():
    eg1 = IncompleteMatching.from_pairs(10, [(1, 4), (2, 10), (5, 8), (7, 9)])
    left = crossing_numbers(eg1)
    phi = crossing_numbers(eg1, [(2, 10), (5, 8), (1, 4), (7, 9)])
    ok = left == ([2, 6, 2, 0], 10) and phi == ([7, 2, 1, 0], 10)
    return record(1, "crossing-number anchor", ok, f"left {left}, phi {phi}")


def criterion_2():
    worst = 0.0
    for d in (1, 2, 3):
        for q in (0.2, 0.5, 0.9):
            T = make_twist("q-flip", {"q": q, "d": d})
            for n in range(1, 6):
                worst = max(worst, float(np.abs(kernel_matrices(T, n)[1] - permutation_kernel(q, d, n)).max()))
    return record(2, "q-kernel oracle", worst <= 1e-10, f"max |P - sum q^inv U| = {worst:.2e} (tol 1e-10)")


def criterion_3():
    worst = 0.0
    count = 0
    for _, H, T in families():
        for n in range(7):
            for pi in enumerate_matchings(n):
                ref = twisted_contraction(pi, T, H)
                for order in admissible_orders(pi):
                    worst = max(worst, float(np.abs(twisted_contraction(pi, T, H, order) - ref).max()))
                    count += 1
    return record(3, "order independence", worst <= 1e-10,
                  f"{count} (π, order) pairs, max deviation {worst:.2e} (tol 1e-10)")


def criterion_4():
    rng = np.random.default_rng(2024)
    roundtrip = agree = 0.0
    for _, H, T in families():
        tensors = [(n, tensor_from_coeffs(np.eye(2 ** n)[k], n, H)) for n in range(5) for k in range(2 ** n)]
        tensors += [(5, rand_complex(rng, 32)) for _ in range(50)]
        for n, t in tensors:
            P = wick_polynomial(t, n, H, T)
            v = apply_to_vacuum(P, H, T, N=n)
            roundtrip = max(roundtrip, (v - FockVector.from_tensor(t, n, 2)).max_abs())
            agree = max(agree, P.max_abs_difference(wick_recursive(t, n, H, T)))
    ok = roundtrip <= 1e-9 and agree <= 1e-10
    return record(4, "Wick round trip", ok,
                  f"vacuum round trip {roundtrip:.2e} (tol 1e-9), recursive agreement {agree:.2e} (tol 1e-10)")


def criterion_5():
    odd = even = 0.0
    qs = []
    for _, H, T in families():
        qs.append(T.q)
        res = conjugate_variables(H, T, M=2)
        for n in range(6):
            for w in np.ndindex(*(2,) * n):
                for i in range(2):
                    lhs = conjugate_pairing(res.xi[i], w, H, T)
                    if n % 2 == 0:
                        even = max(even, abs(lhs))
                    else:
                        rhs = dq_wick(word_tensor(w, H), n, i, H, T).vacuum_component
                        odd = max(odd, abs(lhs - rhs))
    ok = odd <= 1e-8 and even <= 1e-12 and max(qs) <= 0.5
    return record(5, "conjugate identity", ok,
                  f"odd words {odd:.2e} (tol 1e-8), even words {even:.2e} (tol 1e-12), max q {max(qs):.3f}")


def criterion_6():
    ok = True
    details = []
    for label, H in (("tracial", tracial_subspace(2)), ("nontracial", nontracial())):
        T = make_twist("q-flip", {"q": 0.0}, H)
        res = conjugate_variables(H, T)
        exact = all(np.array_equal(res.xi[i].levels[1], H.dual[:, i]) and
                    not any(np.any(v) for n, v in enumerate(res.xi[i].levels) if n != 1) for i in range(2))
        expected = float(sum(np.linalg.norm(H.dual[:, i]) ** 2 for i in range(2)))
        ok &= exact and res.tail_bound == 0 and abs(res.fisher_value - expected) <= 1e-12
        details.append(f"{label} Fisher {res.fisher_value:.6g} vs {expected:.6g}")
        if label == "tracial":
            ok &= res.fisher_value == 2.0
    return record(6, "free degeneration", ok, ", ".join(details) + ", tail 0")


def criterion_7():
    rng = np.random.default_rng(7)
    slack = 1e-8
    worst = {"W": -np.inf, "Pinv": -np.inf, "create": -np.inf, "Lambda": -np.inf, "LambdaQ": -np.inf}
    N = 6
    for _, H, T in families():
        q = T.q
        c1 = c1_norm(H)
        for n in range(7):
            for pi in enumerate_matchings(n):
                W = twisted_contraction(pi, T, H)
                worst["W"] = max(worst["W"], np.linalg.norm(W, 2) - w_norm_bound(pi, q, c1))
        for n in range(1, 7):
            worst["Pinv"] = max(worst["Pinv"], inverse_kernel_norm(T, n) - omega(q) ** (-n))
        h = rand_complex(rng, 2)
        A = rand_complex(rng, 2, 2)
        cr = ladder("create", h, N, T)
        L = preservation(A, N, T)
        for n in range(N + 1):
            geo = sum(q ** i for i in range(n + 1))
            worst["create"] = max(worst["create"], level_norm(cr, n, T) - geo * np.linalg.norm(h))
            if n:
                worst["Lambda"] = max(worst["Lambda"], level_norm(L, n, T) - np.linalg.norm(A, 2) * geo)
        for Q in (np.diag([1.0, 0.0]), np.eye(2)):
            worst["LambdaQ"] = max(worst["LambdaQ"], operator_norm(preservation(Q, N, T), T) - 1 / (1 - q))
    ok = all(v <= slack for v in worst.values())
    return record(7, "norm-bound suite", ok,
                  ", ".join(f"{k} excess {v:.2e}" for k, v in worst.items()) + " (slack 1e-8)")


def criterion_8():
    rng = np.random.default_rng(8)
    H = build_standard_subspace(**QIJ_SPACE)
    bar = QIJ_SPACE["bar"]
    agree = 0
    for k in range(40):
        if k < 20:
            Q = symmetrized_qij(rng, bar)
        else:
            Q = rand_complex(rng, 4, 4)
            Q = 0.5 * (Q + Q.conj().T) / np.abs(Q).max()
        rep = validate_twist(make_twist("q_ij", {"q": Q}, H), H, level=3)
        agree += rep.crossing_symmetric.passed == qij_relations_hold(Q, bar) == (k < 20)
    Ht = tracial_subspace(2)
    with pytest.warns(RuntimeWarning):
        ident = validate_twist(Twist(np.eye(4), subspace=Ht), Ht)
    Tm = make_twist("matrix-algebra", {"h": [1.0, 2.0], "c": 0.2})
    rm = validate_twist(Tm, Tm.subspace, level=4)
    comm = commuting_residual(Tm)
    ok = agree == 40 and not ident.crossing_symmetric.passed and rm.all_passed and comm <= 1e-12
    return record(8, "validator truth table", ok,
                  f"q_ij verdicts {agree}/40, identity crossing fails: {not ident.crossing_symmetric.passed}, "
                  f"matrix algebra all flags: {rm.all_passed}, ‖T1T2 - T2T1‖ {comm:.1e}")


def criterion_9():
    ok = True
    checked = 0
    for n in range(8):
        for pi in enumerate_matchings(n):
            for k in pi.singletons:
                ok &= dcp_inverse(dcp(pi, k)) == (pi, k)
                checked += 1
            if n >= 2 and 1 in pi.singletons:
                ok &= d_s_inverse(d_s(pi)) == pi
            if n >= 2 and 1 not in pi.singletons:
                ok &= D_p_inverse(*D_p(pi)) == pi
        if n >= 2:
            ms = enumerate_matchings(n)
            ok &= len({d_s(m) for m in ms if 1 in m.singletons}) == len(enumerate_matchings(n - 1))
            ok &= len({D_p(m) for m in ms if 1 not in m.singletons}) == (n - 1) * len(enumerate_matchings(n - 2))
    sizes = [len(enumerate_B(2 * n + 1)) for n in range(5)]
    ok &= sizes == [factorial(n) for n in range(5)]
    cr_ok = all(pi.crossing_number >= n * (n + 1) // 2 for n in range(5) for pi in enumerate_B(2 * n + 1))
    ok &= cr_ok
    return record(9, "combinatorial round trips", bool(ok),
                  f"{checked} (π, k) decompositions, |B(2n+1)| = {sizes}, Cr bound holds: {cr_ok}")


def criterion_10():
    tags = [classify_factor_type([1, 1, 1]).tag, classify_factor_type([2.0, 0.5]).tag,
            classify_factor_type([2, 3, 0.5, 1 / 3], mode="exact").tag]
    lam = classify_factor_type([2.0, 0.5]).lam
    n17 = noninjectivity_criterion(np.ones(17), 0.0).holds
    n16 = noninjectivity_criterion(np.ones(16), 0.0).holds
    ok = tags == ["II1", "IIIlambda", "III1"] and abs(lam - 0.5) < 1e-12 and n17 and not n16
    return record(10, "classifier anchors", ok, f"types {tags} (λ = {lam}), d=17 holds {n17}, d=16 holds {n16}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("check", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [check() for check in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
