"""Compare the compiled and numpy tensor-slot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--batch 8]

Prints the best wall time per kernel and backend, the speedup, and the
max relative difference between the two backends, once with a dense random
twist and once with the sparse twist 0.5 F.
"""
import argparse
import timeit

import numpy as np

from twistfock.kernels import BACKENDS
from twistfock.matchings import IncompleteMatching, plan_steps
from twistfock.twist import flip


def _cases(d, batch, rng, sparse):
    def rand(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    t = rand(d * d, d * d)
    t = (t + t.conj().T) / (4 * np.linalg.norm(t, 2))
    if sparse:
        t = 0.5 * flip(d)
    c = rand(d * d)
    pi = IncompleteMatching.from_pairs(9, [(1, 6), (2, 8), (4, 9)])
    steps = np.array(plan_steps(pi), dtype=np.int64).reshape(-1, 3)
    cases = []
    for n, k in ((6, 3), (10, 5), (12, 1)):
        x = rand(batch, d ** n)
        cases.append((f"two_site n={n} k={k}", "apply_two_site", (x, d, n, k, t)))
    x = rand(batch, d ** 9)
    cases.append(("plan n=9 |p|=3", "apply_plan", (x, d, 9, steps, t, c)))
    y = rand(batch, d ** 3)
    cases.append(("plan_adjoint n=9 |p|=3", "apply_plan_adjoint",
                   (y, d, 9, steps, t.conj().T.copy(), c.conj())))
    return cases


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    names = [b for b in ("cython", "numpy") if b in BACKENDS]
    if len(names) < 2:
        print("compiled kernels unavailable; timing the numpy backend only")
    print(f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in names) + f"{'speedup':>10s}{'rel.diff':>11s}")
    cases = [("dense " + lab, fn, a) for lab, fn, a in _cases(args.d, args.batch, rng, False)]
    cases += [("q-flip " + lab, fn, a) for lab, fn, a in _cases(args.d, args.batch, rng, True)]
    for label, fn, a in cases:
        times, outs = [], []
        for b in names:
            f = getattr(BACKENDS[b], fn)
            outs.append(f(*a))
            times.append(min(timeit.repeat(lambda: f(*a), number=1, repeat=args.repeat)))
        line = f"{label:32s}" + "".join(f"{1e3 * t:10.3f}ms" for t in times)
        if len(names) == 2:
            diff = np.abs(outs[0] - outs[1]).max() / max(np.abs(outs[1]).max(), 1e-300)
            line += f"{times[1] / times[0]:9.2f}x{diff:11.1e}"
        print(line)


if __name__ == "__main__":
    main()
