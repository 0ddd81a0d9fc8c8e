"""Exact QFT_p from exact eigenvalue estimation.

Register plan (most significant first): ``psi, est, r, flag, anc, aux, save``.

* ``psi``  holds the Fourier state; it is a spectator of the estimator.
* ``est``, ``flag``, ``aux``, ``r`` are the estimator's registers.
* ``anc`` is the tuned ancilla ``cos(alpha)|0> + sin(alpha)|1>``.
* ``save`` receives the recovered value. In :func:`exact_qft_apply` the same
  register carries the input ``x`` and is erased by the copy.

With ``A`` the uniformised estimator followed by the ancilla rotation, the good
subspace (``est = x``, flag set, ancilla 1) has probability exactly 1/4, and
one iteration ``A S_0 A^-1 S_good`` with both phases pi maps ``A|0>`` onto the
good subspace (up to a global sign).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .estimation import EstimationConfig, uniformise_circuit
from .probability import ProbabilityError, alpha_from_pbar, avg_success_series
from .sim import (
    Circuit,
    PermutationGate,
    PhaseGate,
    RegisterLayout,
    SimulationError,
    StateVector,
    ry,
)
from .state_prep import (
    build_cascade,
    cascade_circuit,
    dft_matrix,
    recognize_circuit,
    rephase_circuit,
)

#: Largest simulated register file (2**24 amplitudes = 256 MiB).
MAX_QUBITS = 24


class ResourceError(SimulationError):
    pass


def tune_ancilla(p_bar: float) -> float:
    """Angle with ``p_bar * sin(alpha)**2 = 1/4``."""
    if not 0.25 <= p_bar <= 1:
        raise ProbabilityError(
            f"success probability {p_bar} is outside [1/4, 1]; a single "
            "damped iteration cannot be tuned")
    return math.asin(min(1.0, math.sqrt(1 / (4 * p_bar))))


@dataclass(frozen=True)
class AmplificationSpec:
    alpha: float
    phi: float = math.pi
    varphi: float = math.pi
    T: int = 1
    ancilla: str = "anc"
    predicate: str = "est = x and flag = 1 and anc = 1"

    def __post_init__(self):
        if self.T < 0:
            raise SimulationError("iteration count must be non-negative")


def qft_layout(cfg: EstimationConfig, save: str = "save",
               ancilla: str = "anc") -> RegisterLayout:
    m = cfg.m
    return RegisterLayout([(cfg.psi, m), (cfg.est, m), (cfg.r, m), (cfg.flag, 1),
                           (ancilla, 1), (cfg.aux, cfg.n), (save, m)])


def reflect_zero_gate(layout: RegisterLayout, work_registers, phi: float) -> PhaseGate:
    pattern = layout.pattern(**{r: 0 for r in work_registers})
    return PhaseGate(pattern, phi, label="reflect_zero")


def reflect_good_circuit(layout: RegisterLayout, spec: AmplificationSpec,
                         cfg: EstimationConfig) -> Circuit:
    """Phase ``varphi`` on ``est = x`` (recognised against ``Psi_x``), flag
    set and ancilla 1; needs no knowledge of x."""
    rec = recognize_circuit(layout, cfg.est, cfg.psi, build_cascade(cfg.p, cfg.m))
    mark = PhaseGate(layout.pattern(**{cfg.psi: 0, cfg.flag: 1, spec.ancilla: 1}),
                     spec.varphi, label="mark_good")
    return Circuit([rec, mark, rec.inverse()], label="reflect_good")


def reflect_zero(state: StateVector, work_registers, phi: float = math.pi) -> StateVector:
    return state.copy().apply(reflect_zero_gate(state.layout, work_registers, phi))


def reflect_good(state: StateVector, spec: AmplificationSpec,
                 cfg: EstimationConfig) -> StateVector:
    return state.copy().apply(reflect_good_circuit(state.layout, spec, cfg))


@dataclass(frozen=True)
class ExactQFTPlan:
    """Everything precomputed from ``(p, n)``: success probability, ancilla
    angle, and the circuits. Immutable and shareable."""

    cfg: EstimationConfig
    spec: AmplificationSpec
    pbar: object  # PrecisionDecimal
    layout: RegisterLayout
    A: Circuit
    s_good: Circuit
    s_zero: PhaseGate
    recover: Circuit
    cleanup: Circuit
    save: str = "save"
    work: tuple = field(default=())

    @classmethod
    def build(cls, p: int, n: int | None = None, max_qubits: int = MAX_QUBITS,
              digits: int = 20) -> "ExactQFTPlan":
        if p < 3 or p % 2 == 0:
            raise SimulationError(
                f"unsupported order {p}: odd orders >= 3 only (2**n and p must "
                "be coprime)")
        cfg = EstimationConfig(p, n)
        layout = qft_layout(cfg)
        if layout.total_qubits > max_qubits:
            raise ResourceError(
                f"order {p} with n={cfg.n} needs {layout.total_qubits} qubits "
                f"(limit {max_qubits})")
        pbar = avg_success_series(p, cfg.N, digits)
        alpha = float(alpha_from_pbar(pbar, 17).value)
        spec = AmplificationSpec(alpha)
        A = Circuit([uniformise_circuit(cfg, layout),
                     ry(layout.qubit(spec.ancilla, 0), alpha, label="ancilla")],
                    label="A")
        work = (cfg.est, cfg.r, cfg.flag, spec.ancilla, cfg.aux)
        s_good = reflect_good_circuit(layout, spec, cfg)
        s_zero = reflect_zero_gate(layout, work, spec.phi)
        A_inv = A.inverse()
        recover = Circuit([A, s_good, A_inv, s_zero, A], label="recover")
        copy = PermutationGate.from_function(
            layout, (cfg.est, "save"), lambda e, s: (e, s ^ e), label="copy")
        cleanup = Circuit([copy, recover.inverse()], label="cleanup")
        return cls(cfg, spec, pbar, layout, A, s_good, s_zero, recover, cleanup,
                   work=work)

    @property
    def p(self) -> int:
        return self.cfg.p

    def fourier_input(self, x: int) -> StateVector:
        """``Psi_x`` in the psi register, everything else zero."""
        from .state_prep import fourier_vector
        return StateVector.from_register(self.layout, self.cfg.psi,
                                         fourier_vector(x, self.p, self.cfg.m))

    def good_probability(self, state: StateVector, x: int) -> float:
        c = self.cfg
        return state.probability(**{c.est: x, c.flag: 1, self.spec.ancilla: 1})

    def prepare_circuit(self) -> Circuit:
        """Step 1: ``|x>|0> -> |x>|Psi_x>`` with x in the save register."""
        c = self.cfg
        return Circuit([
            cascade_circuit(build_cascade(c.p, c.m), self.layout, c.psi),
            rephase_circuit(self.layout, self.save, c.psi, c.p, sign=1),
        ], label="prepare")


def exact_recover(state: StateVector, plan: ExactQFTPlan,
                  checkpoint: Callable[[str, StateVector], None] | None = None
                  ) -> StateVector:
    """``|Psi_x, 0> -> -|Psi_x>|x, g_x>`` with probability 1."""
    out = state.copy()
    stages = zip(("A", "reflect_good", "A_inverse", "reflect_zero", "A_again"),
                 plan.recover.ops)
    for name, op in stages:
        out.apply(op)
        if checkpoint is not None:
            checkpoint(name, out)
    out.ledger.counts[plan.recover.label] += 1
    return out


def cleanup_garbage(state: StateVector, plan: ExactQFTPlan) -> StateVector:
    """Copy the estimate to ``save`` and run the recovery backwards."""
    return state.copy().apply(plan.cleanup)


def scratch_residue(state: StateVector, plan: ExactQFTPlan,
                    keep: tuple[str, ...]) -> float:
    """Probability that any register outside ``keep`` is nonzero."""
    zero = {r: 0 for r in plan.layout.names if r not in keep}
    return max(0.0, 1.0 - state.probability(**zero))


def exact_qft_apply(vector, p: int, n: int | None = None,
                    plan: ExactQFTPlan | None = None) -> StateVector:
    """Exact ``QFT_p`` of an m-qubit register state supported on ``0..p-1``.

    Returns the output as a single-register state named ``x``.
    """
    out, _ = run_exact_qft(vector, plan or ExactQFTPlan.build(p, n))
    return StateVector(RegisterLayout([("x", len(out).bit_length() - 1)]), out)


def run_exact_qft(vector, plan: ExactQFTPlan) -> tuple[np.ndarray, StateVector]:
    """Run both steps; returns (psi-register amplitudes with all other
    registers zero, full final state)."""
    c = plan.cfg
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    if vector.size != 1 << c.m:
        raise SimulationError(f"input must have {1 << c.m} amplitudes")
    if np.abs(vector[c.p:]).max(initial=0) > 0:
        raise SimulationError(f"input has support on values >= {c.p}")
    state = StateVector.from_register(plan.layout, plan.save, vector)
    state.apply(plan.prepare_circuit())
    # reverse of |Psi_x, 0> -> |Psi_x, x>: the recover/copy/uncompute block is
    # its own inverse up to reordering, so the same block erases save
    state.apply(plan.recover)
    state.apply(plan.cleanup)
    return state.register_vector(c.psi), state


def verify_against_dft(p: int, n: int | None = None, random_inputs: int = 10,
                       seed: int = 20240101, max_qubits: int = MAX_QUBITS) -> dict:
    """Run the exact QFT on every basis state and on random superpositions and
    compare with the dense DFT_p matrix."""
    plan = ExactQFTPlan.build(p, n, max_qubits=max_qubits)
    c = plan.cfg
    dft = dft_matrix(p, c.m)
    rng = np.random.default_rng(seed)
    inputs = []
    for x in range(p):
        v = np.zeros(1 << c.m, dtype=complex)
        v[x] = 1
        inputs.append(("basis", x, v))
    for k in range(random_inputs):
        v = np.zeros(1 << c.m, dtype=complex)
        v[:p] = rng.normal(size=p) + 1j * rng.normal(size=p)
        v /= np.linalg.norm(v)
        inputs.append(("random", k, v))
    max_inf = 0.0
    max_res = 0.0
    a_count = None
    for kind, key, v in inputs:
        out, final = run_exact_qft(v, plan)
        expected = dft @ v
        fid = abs(np.vdot(expected, out)) ** 2
        max_inf = max(max_inf, 1 - fid)
        max_res = max(max_res, scratch_residue(final, plan, keep=(c.psi,)))
        if a_count is None:
            a_count = final.ledger.counts["A"]
    return {
        "p": p,
        "n": c.n,
        "N": c.N,
        "qubits": plan.layout.total_qubits,
        "pbar": str(plan.pbar),
        "alpha": plan.spec.alpha,
        "inputs": len(inputs),
        "max_infidelity": max_inf,
        "scratch_residue": max_res,
        "a_count": a_count,
    }


def qft_circuit_matrix(p: int, n: int | None = None) -> tuple[np.ndarray, set]:
    """Unitary on the m-qubit register realised by the exact-QFT circuit
    (columns from simulating each basis input; identity above p), and the
    set of continuous gate parameters the circuit used."""
    plan = ExactQFTPlan.build(p, n)
    m = plan.cfg.m
    mat = np.eye(1 << m, dtype=complex)
    params: set = set()
    for x in range(p):
        v = np.zeros(1 << m, dtype=complex)
        v[x] = 1
        out, final = run_exact_qft(v, plan)
        mat[:, x] = out
        params |= final.ledger.params
    return mat, params
