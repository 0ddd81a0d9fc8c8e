"""Fourier-state preparation: the rotation cascade, rephasing, recogniser.

``Psi_x`` denotes the state with amplitude ``exp(2*pi*i*x*y/p)/sqrt(p)`` on
``|y>`` for ``y < p`` and zero elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import (
    Circuit,
    RegisterLayout,
    SimulationError,
    StateVector,
    ceil_log2,
    controlled_phase,
    phase_shift,
    ry,
)

# (level, bit) pairs; level 0 is the most significant qubit
Pattern = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RotationCascade:
    """Controlled SO(2) rotations preparing the uniform state on ``p`` values.

    ``steps[level]`` lists ``(pattern, angle)``: rotate the qubit at that
    level by ``angle`` when the already-processed higher qubits match
    ``pattern``. Patterns of distinct entries at one level are disjoint.
    """

    p: int
    m: int
    steps: tuple[tuple[tuple[Pattern, float], ...], ...]

    def angles(self) -> list[float]:
        return [a for level in self.steps for _, a in level]


def build_cascade(p: int, m: int) -> RotationCascade:
    if p < 1:
        raise SimulationError(f"order must be at least 1, got {p}")
    if p > 1 << m:
        raise SimulationError(f"{p} values do not fit in {m} qubits")
    steps: list[list[tuple[Pattern, float]]] = [[] for _ in range(m)]

    def split(prefix: Pattern, count: int, level: int) -> None:
        width = m - level
        if width == 0 or count == 0:
            return
        if count == 1 << width:
            # a full subtree is a plain uniform superposition: the lower
            # qubits need no conditioning on bits inside it
            for lv in range(level, m):
                steps[lv].append((prefix, np.pi / 4))
            return
        c0 = min(count, 1 << (width - 1))
        c1 = count - c0
        steps[level].append((prefix, float(np.arccos(np.sqrt(c0 / count)))))
        split(prefix + ((level, 0),), c0, level + 1)
        split(prefix + ((level, 1),), c1, level + 1)

    split((), p, 0)
    return RotationCascade(p, m, tuple(tuple(s) for s in steps))


def cascade_circuit(cascade: RotationCascade, layout: RegisterLayout,
                    register: str) -> Circuit:
    """Gates realising ``cascade`` on ``register`` (zero angles skipped)."""
    m = cascade.m
    if layout.width(register) != m:
        raise SimulationError(f"register {register!r} must have {m} qubits")

    def q(level: int) -> int:
        return layout.qubit(register, m - 1 - level)

    ops = []
    for level, entries in enumerate(cascade.steps):
        for pattern, angle in entries:
            if angle == 0:
                continue
            controls = tuple((q(lv), bit) for lv, bit in pattern)
            ops.append(ry(q(level), angle, controls, label="cascade"))
    return Circuit(ops, label="cascade")


def rephase_circuit(layout: RegisterLayout, x_register: str, psi_register: str,
                    p: int, sign: int = 1) -> Circuit:
    """Controlled phases giving ``|x>|y> -> exp(sign*2*pi*i*x*y/p)|x>|y>``."""
    if (1 << layout.width(psi_register)) < p:
        raise SimulationError(f"register {psi_register!r} too small for {p}")
    ops = []
    for i in range(layout.width(x_register)):
        for j in range(layout.width(psi_register)):
            # reduce mod p before scaling: 2**(i+j) can be huge
            angle = sign * 2 * np.pi * (pow(2, i + j, p) / p)
            angle = float(np.remainder(angle, 2 * np.pi))
            if angle == 0:
                continue
            ops.append(controlled_phase([layout.qubit(x_register, i)],
                                        layout.qubit(psi_register, j), angle,
                                        label="rephase"))
    return Circuit(ops, label="rephase")


def recognize_circuit(layout: RegisterLayout, xprime_register: str,
                      psi_register: str, cascade: RotationCascade) -> Circuit:
    """``|x', Psi_x> -> |x', Psi_{x-x'}> -> |x', theta_{x-x'}>`` with
    ``theta_0 = |0>``."""
    return Circuit([
        rephase_circuit(layout, xprime_register, psi_register, cascade.p, sign=-1),
        cascade_circuit(cascade, layout, psi_register).inverse(),
    ], label="recognize")


# -- state-level operations ----------------------------------------------------


def prepare_uniform(p: int) -> StateVector:
    m = ceil_log2(p)
    layout = RegisterLayout([("psi", m)])
    return StateVector(layout).apply(cascade_circuit(build_cascade(p, m), layout, "psi"))


def rephase(state: StateVector, x_register: str, psi_register: str, p: int) -> StateVector:
    return state.copy().apply(rephase_circuit(state.layout, x_register, psi_register, p))


def prepare_fourier_state(x: int, p: int) -> StateVector:
    """``Psi_x`` on a single register named ``psi``.

    With ``x`` known classically, the rephasing is one phase gate per qubit,
    proportional to ``x`` times the qubit's place value.
    """
    if not 0 <= x < p:
        raise SimulationError(f"x={x} outside 0..{p - 1}")
    state = prepare_uniform(p)
    layout = state.layout
    ops = [phase_shift(layout.qubit("psi", j), 2 * np.pi * ((x << j) % p) / p, "rephase")
           for j in range(layout.width("psi")) if (x << j) % p]
    return state.apply(Circuit(ops, label="rephase"))


def fourier_vector(x: int, p: int, m: int | None = None) -> np.ndarray:
    """Reference amplitudes of ``Psi_x`` computed directly from the formula."""
    m = ceil_log2(p) if m is None else m
    v = np.zeros(1 << m, dtype=complex)
    y = np.arange(p)
    v[:p] = np.exp(2j * np.pi * ((x * y) % p) / p) / np.sqrt(p)
    return v


def dft_matrix(p: int, m: int | None = None) -> np.ndarray:
    """Unitary DFT_p on the first ``p`` values of an m-qubit register,
    identity on the values above."""
    m = ceil_log2(p) if m is None else m
    d = 1 << m
    mat = np.eye(d, dtype=complex)
    k = np.arange(p)
    mat[:p, :p] = np.exp(2j * np.pi * (np.outer(k, k) % p) / p) / np.sqrt(p)
    return mat


def recognize(state: StateVector, xprime_register: str, psi_register: str,
              p: int) -> StateVector:
    cascade = build_cascade(p, state.layout.width(psi_register))
    return state.copy().apply(
        recognize_circuit(state.layout, xprime_register, psi_register, cascade))


def unrecognize(state: StateVector, xprime_register: str, psi_register: str,
                p: int) -> StateVector:
    cascade = build_cascade(p, state.layout.width(psi_register))
    return state.copy().apply(
        recognize_circuit(state.layout, xprime_register, psi_register, cascade).inverse())
