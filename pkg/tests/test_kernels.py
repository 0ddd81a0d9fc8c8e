import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactqft import _kernels_py, kernels

compiled = pytest.importorskip("exactqft._kernels")

NQ = 7


def _amps(seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=1 << NQ) + 1j * rng.normal(size=1 << NQ)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 31), target=st.integers(0, NQ - 1),
       controls=st.lists(st.tuples(st.integers(0, NQ - 1), st.integers(0, 1)),
                         max_size=3, unique_by=lambda c: c[0]),
       theta=st.floats(-3, 3))
def test_apply_1q_parity(seed, target, controls, theta):
    controls = [c for c in controls if c[0] != target]
    u = np.array([[np.cos(theta), -1j * np.sin(theta)],
                  [np.sin(theta), 1j * np.cos(theta)]])
    a, b = _amps(seed), _amps(seed)
    pos = [c[0] for c in controls]
    val = [c[1] for c in controls]
    compiled.apply_1q(a, target, u, pos, val)
    _kernels_py.apply_1q(b, target, u, pos, val)
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 31),
       pattern=st.lists(st.tuples(st.integers(0, NQ - 1), st.integers(0, 1)),
                        max_size=4, unique_by=lambda c: c[0]),
       angle=st.floats(-3, 3))
def test_apply_phase_parity(seed, pattern, angle):
    a, b = _amps(seed), _amps(seed)
    pos = [c[0] for c in pattern]
    val = [c[1] for c in pattern]
    compiled.apply_phase(a, pos, val, np.exp(1j * angle))
    _kernels_py.apply_phase(b, pos, val, np.exp(1j * angle))
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31),
       positions=st.lists(st.integers(0, NQ - 1), min_size=1, max_size=4, unique=True))
def test_apply_diagonal_parity(seed, positions):
    rng = np.random.default_rng(seed)
    table = np.exp(1j * rng.normal(size=1 << len(positions)))
    table[0] = 1
    a, b = _amps(seed), _amps(seed)
    compiled.apply_diagonal(a, positions, table)
    _kernels_py.apply_diagonal(b, positions, table)
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), w1=st.integers(1, 3), w2=st.integers(1, 3),
       gap=st.integers(0, 1), swap=st.booleans())
def test_permute_parity(seed, w1, w2, gap, swap):
    rng = np.random.default_rng(seed)
    shifts = [0 + gap, w1 + gap + gap]
    widths = [w1, w2]
    if swap:
        shifts, widths = shifts[::-1], widths[::-1]
    table = rng.permutation(1 << (w1 + w2)).astype(np.int64)
    a = _amps(seed)
    out1, out2 = np.empty_like(a), np.empty_like(a)
    compiled.permute(a, out1, shifts, widths, table)
    _kernels_py.permute(a, out2, shifts, widths, table)
    np.testing.assert_array_equal(out1, out2)


def test_backend_selection():
    assert kernels.BACKEND == ("python" if os.environ.get("EXACTQFT_PURE_PYTHON")
                               else "compiled")
    res = subprocess.run(
        [sys.executable, "-c", "from exactqft import kernels; print(kernels.BACKEND)"],
        env=dict(os.environ, EXACTQFT_PURE_PYTHON="1"), capture_output=True,
        text=True, check=True)
    assert res.stdout.strip() == "python"


def test_pure_python_backend_runs_exact_qft():
    code = ("import numpy as np\n"
            "from exactqft.exact_qft import verify_against_dft\n"
            "r = verify_against_dft(3, random_inputs=2)\n"
            "print(r['max_infidelity'])\n")
    res = subprocess.run([sys.executable, "-c", code],
                         env=dict(os.environ, EXACTQFT_PURE_PYTHON="1"),
                         capture_output=True, text=True, check=True)
    assert float(res.stdout) < 1e-9
