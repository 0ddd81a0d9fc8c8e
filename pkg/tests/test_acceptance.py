"""Acceptance checks, one ``criterion`` marker per item.

The terminal summary prints one PASS/FAIL line per criterion number.
"""
import math
import time
from decimal import Decimal

import numpy as np
import pytest
from sympy import totient

from conftest import random_state
from exactqft.dlog import (
    CyclicGroupOracle,
    TAG_ANGLES,
    descent_setup_params,
    dlog_composite,
    dlog_descent,
    dlog_exact,
    dlog_run,
)
from exactqft.estimation import (
    EstimationConfig,
    EstimationOutcome,
    estimate,
    estimate_circuit,
    uniformise_estimate,
)
from exactqft.exact_qft import (
    ExactQFTPlan,
    cleanup_garbage,
    exact_recover,
    verify_against_dft,
)
from exactqft.probability import (
    PBAR_LIMIT,
    FaulhaberTable,
    avg_success_bruteforce,
    avg_success_hp,
    avg_success_series,
    f_eval,
    p_x,
)
from exactqft.sim import (
    Circuit,
    PermutationGate,
    PhaseGate,
    RegisterLayout,
    StateVector,
    _param_key,
    ceil_log2,
    controlled_phase,
    fidelity,
    hadamard,
    phase_shift,
    ry,
)
from exactqft.state_prep import fourier_vector, prepare_fourier_state

TOL = 1e-10
ODD_UP_TO_13 = [3, 5, 7, 9, 11, 13]


def _valid_n(p):
    m = ceil_log2(p)
    return [n for n in (m, m + 1, m + 2) if (1 << n) > p]


def _psi_state(cfg, x, uniformised=False):
    return StateVector.from_register(cfg.layout(uniformised), cfg.psi,
                                     fourier_vector(x, cfg.p, cfg.m))


@pytest.fixture(scope="module")
def plans():
    return {p: ExactQFTPlan.build(p) for p in (3, 5, 7)}


# 1 ------------------------------------------------------------------------

@pytest.mark.criterion(1, "exact QFT_p equals DFT_p for p in {3,5,7,11,13}")
@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_exact_qft_matches_dft(p):
    t = time.perf_counter()
    r = verify_against_dft(p)
    elapsed = time.perf_counter() - t
    assert r["n"] == ceil_log2(p) + 1
    assert r["inputs"] == p + 10
    assert r["max_infidelity"] < 1e-9
    assert r["scratch_residue"] < 1e-9
    print(f"p={p} qubits={r['qubits']} infidelity={r['max_infidelity']:.2e} "
          f"time={elapsed:.1f}s")


# 2 ------------------------------------------------------------------------

@pytest.mark.criterion(2, "good-subspace probability 1/4 before and 1 after amplification")
@pytest.mark.parametrize("p", [3, 5, 7])
def test_amplification_probabilities(p, plans):
    plan = plans[p]
    for x in range(p):
        s = plan.fourier_input(x)
        pre = plan.good_probability(s.copy().apply(plan.A), x)
        post = plan.good_probability(exact_recover(s, plan), x)
        assert abs(pre - 0.25) < TOL
        assert abs(post - 1) < TOL


# 3, 4 -------------------------------------------------------------------

_GRID = [(p, n) for p in ODD_UP_TO_13 for n in _valid_n(p)]


@pytest.mark.criterion(3, "aux distribution follows f^2(y - xN/p)")
@pytest.mark.parametrize("p, n", _GRID)
def test_peak_law(p, n):
    cfg = EstimationConfig(p, n)
    N = cfg.N
    layout = cfg.layout()
    for x in range(p):
        s = _psi_state(cfg, x).apply(estimate_circuit(cfg, layout, steps=3))
        aux = s.distribution(cfg.aux)
        expected = [f_eval(y - x * N / p, N) ** 2 for y in range(N)]
        assert np.max(np.abs(aux - expected)) < TOL


@pytest.mark.criterion(4, "filtered success equals f^2((xN mod p)/p)")
@pytest.mark.parametrize("p, n", _GRID)
def test_filtered_success_law(p, n):
    cfg = EstimationConfig(p, n)
    for x in range(p):
        out = EstimationOutcome.from_state(estimate(_psi_state(cfg, x), cfg), cfg, x)
        closed = f_eval((x * cfg.N % p) / p, cfg.N) ** 2
        assert abs(out.success_probability - closed) < TOL
        assert abs(p_x(x, p, cfg.N) - closed) < TOL


# 5 ------------------------------------------------------------------------

@pytest.mark.criterion(5, "uniformised success is flat in x and equals the average")
@pytest.mark.parametrize("p, n", [(3, 2), (3, 3), (5, 3), (5, 4), (7, 3), (7, 4),
                                  (9, 5), (11, 5), (13, 4)])
def test_uniformisation(p, n):
    cfg = EstimationConfig(p, n)
    probs = []
    for x in range(p):
        s = uniformise_estimate(_psi_state(cfg, x, True), cfg)
        probs.append(s.probability(**{cfg.est: x, cfg.flag: 1}))
    assert max(probs) - min(probs) < TOL
    assert abs(np.mean(probs) - avg_success_bruteforce(p, cfg.N)) < TOL


# 6 ------------------------------------------------------------------------

@pytest.mark.criterion(6, "series and extended-precision sum agree; large-p value near limit")
@pytest.mark.parametrize("p", range(3, 32, 2))
def test_series_vs_interval_sum(p):
    N = 1 << (ceil_log2(p) + 1)
    s = avg_success_series(p, N, 12)
    h = avg_success_hp(p, N, 12)
    assert str(s) == str(h)
    assert s.error_bound < Decimal("1e-12") and h.error_bound < Decimal("1e-12")
    assert abs(s.value - h.value) < Decimal("1e-12")


@pytest.mark.criterion(6, "series and extended-precision sum agree; large-p value near limit")
def test_large_order_series():
    t = time.perf_counter()
    v = avg_success_series(10007, 16384, 6)
    elapsed = time.perf_counter() - t
    assert elapsed < 60
    assert abs(float(v) - PBAR_LIMIT) < 0.01
    assert abs(float(v) - 0.4514) < 0.01


# 7 ------------------------------------------------------------------------

@pytest.mark.criterion(7, "Faulhaber polynomials are exact for m <= 20, p <= 50")
def test_faulhaber():
    table = FaulhaberTable(20)
    for m in range(21):
        for p in range(1, 51):
            assert table(m, p) == sum(k ** m for k in range(p))
    for p in range(1, 51):
        assert table(1, p) == p * (p - 1) // 2


# 8 ------------------------------------------------------------------------

@pytest.mark.criterion(8, "recover plus cleanup applies A exactly six times")
@pytest.mark.parametrize("p", [3, 5, 7])
def test_six_applications(p, plans):
    plan = plans[p]
    out = cleanup_garbage(exact_recover(plan.fourier_input(1), plan), plan)
    assert out.ledger.counts["A"] == 6


# 9 ------------------------------------------------------------------------

@pytest.mark.criterion(9, "dlog success 1-1/p and phi(q)/q; amplified dlog is exact")
@pytest.mark.parametrize("p", [3, 5, 7])
def test_dlog_prime_order(p):
    for a in range(p):
        dist = dlog_run(p, CyclicGroupOracle(p, a))
        assert abs(dist[1:].sum() - (1 - 1 / p)) < TOL
        out = dlog_exact(p, CyclicGroupOracle(p, a))
        assert out.exponent == a and out.success
        assert abs(out.base_probability - (1 - 1 / p)) < TOL
        assert abs(out.probability - 1) < TOL


@pytest.mark.criterion(9, "dlog success 1-1/p and phi(q)/q; amplified dlog is exact")
@pytest.mark.parametrize("q, factors", [(9, [9]), (15, [3, 5]), (21, [3, 7])])
def test_dlog_composite_order(q, factors):
    phi = int(totient(q)) / q
    for a in range(q):
        out = dlog_composite(q, factors, CyclicGroupOracle(q, a))
        assert out.exponent == a and out.success
        assert abs(out.base_probability - phi) < TOL
        assert abs(out.probability - 1) < TOL


# 10 -----------------------------------------------------------------------

@pytest.mark.criterion(10, "descent terminates correctly on every branch with fixed parameters")
@pytest.mark.parametrize("q", [9, 15])
def test_descent(q):
    tags = {_param_key("ry", a) for a in TAG_ANGLES.values()}
    assert len(tags) == 3
    allowed = descent_setup_params(q) | tags
    for a in range(q):
        out = dlog_descent(q, CyclicGroupOracle(q, a))
        assert out.success and out.exponent == a
        assert out.rounds <= math.ceil(math.log2(q))
        assert out.transcript
        for leaf in out.transcript:
            assert leaf["verified"] and leaf["exponent"] == a
            assert leaf["rounds"] <= math.ceil(math.log2(q))
        assert out.params <= allowed


# 11 -----------------------------------------------------------------------

@pytest.mark.criterion(11, "property suites: reversibility, Fourier basis, Grover plane")
def test_reversibility_random_states(rng):
    layout = RegisterLayout([("a", 2), ("b", 2), ("c", 1)])
    add = PermutationGate.from_function(layout, ("a", "b"), lambda a, b: (a, (a + b) % 4))
    circ = Circuit([hadamard(0), ry(2, 0.3, ((0, 1),)), add, phase_shift(3, 0.7),
                    controlled_phase([1, 2], 4, 0.2), PhaseGate(((0, 0), (4, 1)), 2.0),
                    hadamard(4)])
    for _ in range(100):
        s = random_state(layout, rng)
        fwd = s.copy().apply(circ)
        assert abs(fwd.norm() - 1) < TOL
        assert fidelity(fwd.apply(circ.inverse()), s) >= 1 - TOL


@pytest.mark.criterion(11, "property suites: reversibility, Fourier basis, Grover plane")
def test_fourier_basis_properties():
    for p in range(2, 65):
        m = ceil_log2(p)
        states = np.array([prepare_fourier_state(x, p).amplitudes for x in range(p)])
        assert np.max(np.abs(states.conj() @ states.T - np.eye(p))) < TOL
        layout = RegisterLayout([("psi", m)])
        shift = PermutationGate.from_function(
            layout, ("psi",), lambda y: (np.where(y < p, (y + 1) % p, y),), "shift")
        for x, amps in enumerate(states):
            out = StateVector(layout, amps).apply(shift).amplitudes
            assert np.max(np.abs(out - np.exp(-2j * np.pi * x / p) * amps)) < TOL


@pytest.mark.criterion(11, "property suites: reversibility, Fourier basis, Grover plane")
@pytest.mark.parametrize("p", [3, 5])
def test_grover_plane(p, plans):
    plan = plans[p]
    c = plan.cfg
    names = plan.layout.names
    A_inv = plan.A.inverse()
    for x in range(p):
        s = plan.fourier_input(x)
        psi = fourier_vector(x, p, c.m)
        a0 = s.copy().apply(plan.A).amplitudes
        mask = np.zeros(plan.layout.dims, dtype=bool)
        idx = [slice(None)] * len(names)
        for name, v in ((c.est, x), (c.flag, 1), (plan.spec.ancilla, 1)):
            idx[names.index(name)] = v
        mask[tuple(idx)] = True
        good = np.where(mask.reshape(-1), a0, 0)
        bad = a0 - good
        fwd = [good / np.linalg.norm(good), bad / np.linalg.norm(bad)]
        back = [StateVector(plan.layout, v).apply(A_inv).amplitudes for v in fwd]
        stages = []

        def check(stage, state):
            stages.append(stage)
            rho = state.reduced_density(c.psi)
            assert abs(np.real(np.vdot(psi, rho @ psi)) - 1) < TOL
            basis = back if stage in ("A_inverse", "reflect_zero") else fwd
            v = state.amplitudes
            assert np.linalg.norm(v - sum(np.vdot(b, v) * b for b in basis)) < TOL

        exact_recover(s, plan, checkpoint=check)
        assert len(stages) >= 4
