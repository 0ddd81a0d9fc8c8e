import numpy as np
import pytest

from exactqft.estimation import (
    EstimationConfig,
    EstimationOutcome,
    controlled_modular_add,
    estimate,
    estimate_circuit,
    filter_pass,
    qft_pow2,
    rounded_estimate,
    uniformise_estimate,
)
from exactqft.probability import avg_success_bruteforce, f_eval, p_x
from exactqft.sim import RegisterLayout, SimulationError, StateVector, hadamard
from exactqft.state_prep import fourier_vector


def _psi_state(cfg, x, uniformised=False):
    layout = cfg.layout(uniformised)
    return StateVector.from_register(layout, cfg.psi, fourier_vector(x, cfg.p, cfg.m))


def test_config_defaults_and_guards():
    cfg = EstimationConfig(5)
    assert (cfg.n, cfg.N, cfg.m) == (4, 16, 3)
    with pytest.raises(SimulationError):
        EstimationConfig(5, n=2)
    with pytest.raises(SimulationError):
        EstimationConfig(1)


def test_modular_add_examples():
    layout = RegisterLayout([("a", 3), ("b", 3)])
    out = controlled_modular_add(StateVector.basis(layout, a=3, b=4), "a", "b", 5)
    assert out.amplitude(a=3, b=2) == 1
    for b in range(5):
        out = controlled_modular_add(StateVector.basis(layout, a=0, b=b), "a", "b", 5)
        assert out.amplitude(a=0, b=b) == 1
    with pytest.raises(SimulationError):
        controlled_modular_add(StateVector.basis(layout, a=1, b=6), "a", "b", 5)


def test_modular_add_kickback_phase():
    layout = RegisterLayout([("a", 3), ("b", 3)])
    s = StateVector.from_register(layout, "b", fourier_vector(2, 5), a=1)
    out = controlled_modular_add(s, "a", "b", 5)
    ratio = np.vdot(s.amplitudes, out.amplitudes)
    assert ratio == pytest.approx(np.exp(-4j * np.pi / 5), abs=1e-12)


def test_qft_pow2_examples():
    one = RegisterLayout([("r", 1)])
    np.testing.assert_allclose(qft_pow2(StateVector(one), "r").amplitudes,
                               [2 ** -0.5] * 2, atol=1e-12)
    two = RegisterLayout([("r", 2)])
    out = qft_pow2(StateVector.basis(two, r=1), "r").amplitudes
    np.testing.assert_allclose(out, np.array([1, 1j, -1, -1j]) / 2, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_qft_pow2_matches_dft(n, rng):
    N = 1 << n
    layout = RegisterLayout([("r", n)])
    dft = np.exp(2j * np.pi * np.outer(range(N), range(N)) / N) / np.sqrt(N)
    v = rng.normal(size=N) + 1j * rng.normal(size=N)
    v /= np.linalg.norm(v)
    s = StateVector(layout, v)
    np.testing.assert_allclose(qft_pow2(s, "r").amplitudes, dft @ v, atol=1e-10)
    back = qft_pow2(qft_pow2(s, "r"), "r", inverse=True)
    assert abs(np.vdot(back.amplitudes, v)) ** 2 >= 1 - 1e-10


def test_rounding_and_filter_exact():
    p, N = 5, 16
    y = np.arange(N)
    assert list(rounded_estimate(y, p, N)) == [-(-v * p // N) for v in y]
    # y = floor(x N / p) always passes
    for x in range(p):
        w = x * N // p
        assert filter_pass(w, p, N)
        assert rounded_estimate(w, p, N) % p == x


def test_success_x0_is_one():
    for p in (3, 5, 7):
        cfg = EstimationConfig(p)
        out = EstimationOutcome.from_state(estimate(_psi_state(cfg, 0), cfg), cfg, 0)
        assert out.success_probability == pytest.approx(1, abs=1e-12)


def test_p3_n2_x1_success():
    cfg = EstimationConfig(3, n=2)
    out = EstimationOutcome.from_state(estimate(_psi_state(cfg, 1), cfg), cfg, 1)
    f = np.sin(np.pi / 3) / (4 * np.sin(np.pi / 12))
    assert out.success_probability == pytest.approx(f ** 2, abs=1e-12)
    assert out.success_probability == pytest.approx(p_x(1, 3, 4), abs=1e-12)
    assert abs(out.joint.sum() - 1) < 1e-12


@pytest.mark.parametrize("p", [3, 5, 7])
def test_psi_unchanged_by_estimate(p):
    cfg = EstimationConfig(p)
    for x in range(p):
        out = estimate(_psi_state(cfg, x), cfg)
        rho = out.reduced_density(cfg.psi)
        v = fourier_vector(x, p, cfg.m)
        assert np.real(np.vdot(v, rho @ v)) == pytest.approx(1, abs=1e-10)


def test_estimate_requires_clean_registers():
    cfg = EstimationConfig(3)
    s = _psi_state(cfg, 1).apply(hadamard(cfg.layout().qubit(cfg.aux, 0)))
    with pytest.raises(SimulationError):
        estimate(s, cfg)


@pytest.mark.parametrize("p, n", [(3, 2), (3, 3), (5, 3), (5, 4), (7, 4), (11, 5), (13, 4)])
def test_peak_and_success_laws(p, n):
    cfg = EstimationConfig(p, n)
    N = cfg.N
    layout = cfg.layout()
    for x in range(p):
        s = _psi_state(cfg, x).apply(estimate_circuit(cfg, layout, steps=3))
        aux = s.distribution(cfg.aux)
        expected = [f_eval(y - x * N / p, N) ** 2 if abs(y - x * N / p) < N else 0
                    for y in range(N)]
        np.testing.assert_allclose(aux, expected, atol=1e-10)
        out = EstimationOutcome.from_state(estimate(_psi_state(cfg, x), cfg), cfg, x)
        assert out.success_probability == pytest.approx(p_x(x, p, N), abs=1e-10)
        assert (x * N // p) in out.garbage_for(x)


@pytest.mark.parametrize("p, n", [(3, 2), (5, 3), (7, 4)])
def test_uniformised_success_is_average(p, n):
    cfg = EstimationConfig(p, n)
    pbar = avg_success_bruteforce(p, cfg.N)
    for x in range(p):
        s = uniformise_estimate(_psi_state(cfg, x, True), cfg)
        prob = s.probability(**{cfg.est: x, cfg.flag: 1})
        assert prob == pytest.approx(pbar, abs=1e-10)
        rho = s.reduced_density(cfg.psi)
        v = fourier_vector(x, p, cfg.m)
        assert np.real(np.vdot(v, rho @ v)) == pytest.approx(1, abs=1e-10)
