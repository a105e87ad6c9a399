#!/usr/bin/env python3
"""Timing comparison of the compiled kernels against the numpy fallback.

Micro-benchmarks every batch kernel on a synthetic workload sized from
the command line, then times one full certified-rate bisection per
backend in separate subprocesses (the backend is frozen at import time,
so end-to-end timings cannot share a process).

Run from the repository root:

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --dim 6 --constraints 256 --repeats 11
"""

import argparse
import os
import statistics
import subprocess
import sys
import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from cjsr._kernels import load_backend, sym_basis

EXAMPLE = Path(__file__).resolve().parent.parent / "examples" / "sec5.json"


def build_workload(args):
    rng = np.random.default_rng(args.seed)
    n = args.dim
    m = n * (n + 1) // 2
    w = SimpleNamespace(n=n, m=m, slots=args.slots)
    w.mats = np.ascontiguousarray(rng.normal(size=(args.labels, n, n)) / np.sqrt(n))
    w.idx = np.ascontiguousarray(
        rng.integers(0, args.labels, size=(args.rows, args.chain_len)), dtype=np.int64
    )
    w.x = rng.normal(size=n)
    w.amats = np.ascontiguousarray(
        rng.normal(size=(args.constraints, n, n)) / np.sqrt(n)
    )
    w.sym = np.ascontiguousarray(0.5 * (w.amats + w.amats.transpose(0, 2, 1)))
    w.ii = np.ascontiguousarray(
        rng.integers(0, args.slots, size=args.constraints), dtype=np.int64
    )
    w.jj = np.ascontiguousarray(
        rng.integers(0, args.slots, size=args.constraints), dtype=np.int64
    )
    g = 0.2 * rng.normal(size=(args.slots, n, n))
    w.q = np.ascontiguousarray(np.eye(n) + np.einsum("kij,klj->kil", g, g))
    w.gamma2 = 4.0
    w.basis = sym_basis(n)
    tmp = np.einsum("mkl,clj->cmkj", w.basis, w.amats)
    w.te = np.ascontiguousarray(np.einsum("cki,cmkj->cmij", w.amats, tmp))
    fallback = load_backend("fallback")
    mins = fallback.constraint_min_eigs(w.gamma2, w.q, w.ii, w.jj, w.amats)
    w.s = float(np.min(mins)) - 1.0
    return w


def kernel_calls(impl, w):
    def newton():
        grad = np.zeros(w.slots * w.m + 1)
        hess = np.zeros((grad.size, grad.size))
        return impl.constraint_newton(
            w.gamma2, w.q, w.ii, w.jj, w.amats, w.te, w.basis, w.s, grad, hess
        )

    return [
        ("chain_products", lambda: impl.chain_products(w.mats, w.idx)),
        ("chain_apply", lambda: impl.chain_apply(w.mats, w.idx, w.x)),
        ("sym_min_eig_batch", lambda: impl.sym_min_eig_batch(w.sym)),
        ("norm_sq_batch", lambda: impl.norm_sq_batch(w.amats)),
        (
            "constraint_min_eigs",
            lambda: impl.constraint_min_eigs(w.gamma2, w.q, w.ii, w.jj, w.amats),
        ),
        (
            "constraint_logdet",
            lambda: impl.constraint_logdet(w.gamma2, w.q, w.ii, w.jj, w.amats, w.s),
        ),
        ("constraint_newton", newton),
    ]


def median_ms(fn, repeats):
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return 1e3 * statistics.median(samples)


def check_agreement(fallback, compiled, w):
    a = fallback.chain_products(w.mats, w.idx)
    b = compiled.chain_products(w.mats, w.idx)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
    a = fallback.constraint_min_eigs(w.gamma2, w.q, w.ii, w.jj, w.amats)
    b = compiled.constraint_min_eigs(w.gamma2, w.q, w.ii, w.jj, w.amats)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def end_to_end_seconds(backend):
    code = (
        "import time;"
        "from cjsr import load_system, lift, gamma_star;"
        "import cjsr._kernels as K;"
        f"s = load_system({str(EXAMPLE)!r});"
        "t0 = time.perf_counter();"
        "r = gamma_star(lift(s, 3));"
        "print(K.BACKEND, time.perf_counter() - t0, r.gamma_feasible)"
    )
    proc = subprocess.run(
        [sys.executable, "-c", code],
        env={**os.environ, "CJSR_KERNELS": backend},
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr.strip())
    name, seconds, gamma = proc.stdout.split()
    return name, float(seconds), float(gamma)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--slots", type=int, default=8)
    p.add_argument("--constraints", type=int, default=64)
    p.add_argument("--labels", type=int, default=6)
    p.add_argument("--chain-len", type=int, default=12)
    p.add_argument("--rows", type=int, default=256)
    p.add_argument("--repeats", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skip-e2e", action="store_true")
    args = p.parse_args(argv)

    w = build_workload(args)
    fallback = load_backend("fallback")
    try:
        compiled = load_backend("compiled")
    except ImportError:
        compiled = None
        print("compiled backend unavailable; timing the fallback only\n")
    if compiled is not None:
        check_agreement(fallback, compiled, w)

    print(
        f"workload: dim {args.dim}, {args.slots} forms, "
        f"{args.constraints} constraints, {args.rows}x{args.chain_len} chains"
    )
    header = f"{'kernel':<22}{'numpy (ms)':>12}"
    if compiled is not None:
        header += f"{'compiled (ms)':>15}{'speedup':>9}"
    print(header)
    fb_calls = dict(kernel_calls(fallback, w))
    cp_calls = dict(kernel_calls(compiled, w)) if compiled is not None else {}
    for name in fb_calls:
        fb = median_ms(fb_calls[name], args.repeats)
        line = f"{name:<22}{fb:>12.3f}"
        if compiled is not None:
            cp = median_ms(cp_calls[name], args.repeats)
            line += f"{cp:>15.3f}{fb / cp:>8.1f}x"
        print(line)

    if args.skip_e2e:
        return 0
    print("\nend to end: bisected rate of the depth-3 lift of the bundled example")
    for backend in ("fallback",) + (("compiled",) if compiled is not None else ()):
        name, seconds, gamma = end_to_end_seconds(backend)
        print(f"{name:<10} {seconds:8.3f} s   gamma* = {gamma:.9f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
