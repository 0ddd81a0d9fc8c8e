"""Eigenvalue estimation of ``Psi_x`` under the cyclic shift.

This is the heuristic algorithm that amplitude amplification makes exact.
Given ``Psi_x`` in the psi register it

1. puts the aux register in the uniform superposition over ``0..N-1``,
2. adds the aux value into the psi register mod p (kickback of
   ``exp(-2*pi*i*x*y/p)`` onto the aux register),
3. applies the forward size-N Fourier transform to aux, which peaks the aux
   distribution at ``y ~ x*N/p``,
4. adds ``ceil(y*p/N) mod p`` into the estimate register, and
5. flips the flag qubit when ``y > ceil(y*p/N)*N/p - 1``, i.e. when ``y``
   is the largest aux value rounding up to its estimate.

The psi register is left in ``Psi_x`` on every branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .sim import (
    Circuit,
    PermutationGate,
    RegisterLayout,
    SimulationError,
    StateVector,
    ceil_log2,
    controlled_phase,
    hadamard,
)
from .state_prep import build_cascade, cascade_circuit, rephase_circuit


@dataclass(frozen=True)
class EstimationConfig:
    p: int
    n: int | None = None
    psi: str = "psi"
    aux: str = "aux"
    est: str = "est"
    flag: str = "flag"
    r: str = "r"

    def __post_init__(self):
        if self.p < 2:
            raise SimulationError(f"order must be at least 2, got {self.p}")
        if self.n is None:
            object.__setattr__(self, "n", ceil_log2(self.p) + 1)
        if self.N <= self.p:
            raise SimulationError(f"need N = 2**{self.n} > p = {self.p}")
        if self.p % 2 and gcd(self.N, self.p) != 1:  # pragma: no cover
            raise AssertionError("odd p must be coprime to N")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def m(self) -> int:
        return ceil_log2(self.p)

    def registers(self, uniformised: bool = False) -> list[tuple[str, int]]:
        regs = [(self.psi, self.m), (self.est, self.m), (self.flag, 1),
                (self.aux, self.n)]
        if uniformised:
            regs.insert(2, (self.r, self.m))
        return regs

    def layout(self, uniformised: bool = False) -> RegisterLayout:
        return RegisterLayout(self.registers(uniformised))


# -- exact integer helpers ----------------------------------------------------


def rounded_estimate(y, p: int, N: int):
    """``ceil(y*p/N)`` (before reduction mod p)."""
    return (np.asarray(y) * p + N - 1) // N


def filter_pass(y, p: int, N: int):
    """``y > ceil(y*p/N)*N/p - 1`` evaluated exactly as ``p*y > c*N - p``."""
    y = np.asarray(y)
    return p * y > rounded_estimate(y, p, N) * N - p


# -- circuits -------------------------------------------------------------------


def qft_pow2_circuit(layout: RegisterLayout, register: str,
                     inverse: bool = False) -> Circuit:
    """Order-2**n Fourier transform ``|j> -> sum_k exp(2*pi*i*j*k/N)|k>/sqrt(N)``."""
    n = layout.width(register)
    ops = []
    for b in range(n - 1, -1, -1):
        ops.append(hadamard(layout.qubit(register, b)))
        for c in range(b - 1, -1, -1):
            ops.append(controlled_phase([layout.qubit(register, c)],
                                        layout.qubit(register, b),
                                        2 * np.pi / (1 << (b - c + 1)), label="qft_phase"))
    rev = np.array([int(format(v, f"0{n}b")[::-1], 2) for v in range(1 << n)])
    ops.append(PermutationGate((register,), rev, label="bit_reverse"))
    circ = Circuit(ops, label="qft_pow2")
    return circ.inverse() if inverse else circ


def modular_add_gate(layout: RegisterLayout, y_register: str, target_register: str,
                     p: int, sign: int = 1, label: str = "modadd") -> PermutationGate:
    """``|a>|b> -> |a>|(b + sign*a) mod p>`` for ``b < p``; values ``b >= p``
    are left alone. ``a`` ranges over the whole source register."""
    def fn(a, b):
        return a, np.where(b < p, (b + sign * a) % p, b)
    return PermutationGate.from_function(layout, (y_register, target_register), fn, label)


def readout_gate(cfg: EstimationConfig, layout: RegisterLayout) -> PermutationGate:
    """Steps 4 and 5: estimate and filter flag computed from the aux value."""
    p, N = cfg.p, cfg.N

    def fn(y, e, f):
        est = rounded_estimate(y, p, N) % p
        e2 = np.where(e < p, (e + est) % p, e)
        return y, e2, f ^ filter_pass(y, p, N).astype(np.int64)
    return PermutationGate.from_function(layout, (cfg.aux, cfg.est, cfg.flag), fn,
                                         "readout")


def estimate_circuit(cfg: EstimationConfig, layout: RegisterLayout,
                     steps: int = 5) -> Circuit:
    """Eigenvalue estimation; ``steps < 5`` truncates after that step."""
    parts = [
        Circuit([hadamard(q) for q in layout.qubits(cfg.aux)], label="aux_uniform"),
        Circuit([modular_add_gate(layout, cfg.aux, cfg.psi, cfg.p, label="kickback")],
                label="kickback"),
        qft_pow2_circuit(layout, cfg.aux),
        Circuit([readout_gate(cfg, layout)], label="readout"),
    ]
    # readout does steps 4 and 5 together
    parts = parts[:min(steps, 4)]
    return Circuit(parts, label="estimate")


def uniformise_circuit(cfg: EstimationConfig, layout: RegisterLayout) -> Circuit:
    """Instance-independent estimator.

    A coherent offset ``r`` turns ``Psi_x`` into ``Psi_{x+r}``; after the
    estimate the offset is taken off the psi register again (restoring
    ``Psi_x`` exactly) and subtracted from the estimate. ``r`` stays behind
    as garbage.
    """
    cascade = build_cascade(cfg.p, cfg.m)
    return Circuit([
        cascade_circuit(cascade, layout, cfg.r),
        rephase_circuit(layout, cfg.r, cfg.psi, cfg.p, sign=1),
        estimate_circuit(cfg, layout),
        rephase_circuit(layout, cfg.r, cfg.psi, cfg.p, sign=-1),
        Circuit([modular_add_gate(layout, cfg.r, cfg.est, cfg.p, sign=-1,
                                  label="subtract_r")], label="subtract_r"),
    ], label="uniformise")


# -- state-level operations ---------------------------------------------------------


def controlled_modular_add(state: StateVector, y_register: str, target_register: str,
                           p: int) -> StateVector:
    viol = state.support_violation(target_register, p)
    if viol > 0:
        raise SimulationError(
            f"register {target_register!r} has weight {viol:.3g} on values >= {p}")
    return state.copy().apply(modular_add_gate(state.layout, y_register,
                                               target_register, p))


def qft_pow2(state: StateVector, register: str, inverse: bool = False) -> StateVector:
    return state.copy().apply(qft_pow2_circuit(state.layout, register, inverse))


def _require_zero(state: StateVector, registers) -> None:
    for r in registers:
        if state.probability(**{r: 0}) < 1 - 1e-12:
            raise SimulationError(f"register {r!r} must start in |0>")


def estimate(state: StateVector, cfg: EstimationConfig) -> StateVector:
    _require_zero(state, (cfg.aux, cfg.est, cfg.flag))
    return state.copy().apply(estimate_circuit(cfg, state.layout))


def uniformise_estimate(state: StateVector, cfg: EstimationConfig) -> StateVector:
    _require_zero(state, (cfg.aux, cfg.est, cfg.flag, cfg.r))
    return state.copy().apply(uniformise_circuit(cfg, state.layout))


@dataclass(frozen=True)
class EstimationOutcome:
    """Joint distribution over (aux value y, estimate x', flag) and the
    probability of the good outcome ``x' = x`` with the flag set."""

    joint: np.ndarray  # shape (N, 2**m, 2)
    success_probability: float

    @classmethod
    def from_state(cls, state: StateVector, cfg: EstimationConfig,
                   x: int) -> "EstimationOutcome":
        joint = state.distribution(cfg.aux, cfg.est, cfg.flag)
        return cls(joint, float(joint[:, x, 1].sum()))

    def garbage_for(self, x: int) -> dict[int, float]:
        """Probability of each aux value on the good branch."""
        col = self.joint[:, x, 1]
        return {int(y): float(col[y]) for y in np.nonzero(col > 1e-15)[0]}
