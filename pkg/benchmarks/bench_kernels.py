"""Compiled vs numpy kernel timings, per kernel and end to end.

    python benchmarks/bench_kernels.py [--qubits 16 20 22] [--repeat 5]

End-to-end numbers run one exact QFT_p in a subprocess per backend, selecting
the numpy path with EXACTQFT_PURE_PYTHON=1.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from exactqft import _kernels_py

try:
    from exactqft import _kernels
except ImportError:  # extension not built
    _kernels = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def kernel_cases(nq):
    rng = np.random.default_rng(0)
    amps = (rng.normal(size=1 << nq) + 1j * rng.normal(size=1 << nq)).astype(complex)
    amps /= np.linalg.norm(amps)
    out = np.empty_like(amps)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    table = rng.permutation(1 << 8).astype(np.int64)
    diag = np.exp(1j * rng.normal(size=1 << 6))
    return {
        "1q high": lambda k: k.apply_1q(amps, nq - 1, h, [], []),
        "1q low": lambda k: k.apply_1q(amps, 0, h, [], []),
        "1q controlled": lambda k: k.apply_1q(amps, nq - 2, h, [nq - 1, nq - 3], [1, 0]),
        "phase": lambda k: k.apply_phase(amps, [nq - 1, 3], [1, 1], 1j),
        "diagonal(6)": lambda k: k.apply_diagonal(amps, list(range(nq - 6, nq)), diag),
        "permute(8)": lambda k: k.permute(amps, out, [nq - 4, 4], [4, 4], table),
    }


_E2E = ("import time, numpy as np\n"
        "from exactqft.exact_qft import ExactQFTPlan, run_exact_qft\n"
        "plan = ExactQFTPlan.build({p})\n"
        "v = np.zeros(1 << plan.cfg.m, complex); v[1] = 1\n"
        "t = time.perf_counter(); run_exact_qft(v, plan)\n"
        "print(time.perf_counter() - t)\n")


def end_to_end(p):
    times = {}
    for name, extra in (("compiled", {}), ("python", {"EXACTQFT_PURE_PYTHON": "1"})):
        env = dict(os.environ, **extra)
        res = subprocess.run([sys.executable, "-c", _E2E.format(p=p)], env=env,
                             capture_output=True, text=True, check=True)
        times[name] = float(res.stdout.strip())
    return times


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[16, 20, 22])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--primes", type=int, nargs="+", default=[5, 7])
    args = ap.parse_args(argv)
    if _kernels is None:
        sys.exit("compiled extension not built; run pip install -e . first")

    print(f"{'kernel':<16}{'qubits':>7}{'compiled ms':>13}{'numpy ms':>11}{'speedup':>9}")
    for nq in args.qubits:
        for name, fn in kernel_cases(nq).items():
            tc = _time(lambda: fn(_kernels), args.repeat)
            tp = _time(lambda: fn(_kernels_py), args.repeat)
            print(f"{name:<16}{nq:>7}{tc * 1e3:>13.2f}{tp * 1e3:>11.2f}{tp / tc:>9.2f}")

    print()
    print(f"{'exact QFT_p':<16}{'p':>7}{'compiled s':>13}{'numpy s':>11}{'speedup':>9}")
    for p in args.primes:
        t = end_to_end(p)
        print(f"{'one input':<16}{p:>7}{t['compiled']:>13.3f}{t['python']:>11.3f}"
              f"{t['python'] / t['compiled']:>9.2f}")


if __name__ == "__main__":
    main()
