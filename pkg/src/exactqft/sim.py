"""Dense state-vector simulation over named multi-qubit registers.

Index convention: registers are laid out in declaration order with the first
register in the most significant bits, and within a register the most
significant qubit comes first. Global qubit 0 is therefore the top bit of the
first register. Gates address qubits through :meth:`RegisterLayout.qubit`,
which takes a place value (bit 0 = least significant) so that callers never
reason about the storage order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import kernels

#: Tolerance used for every exactness assertion in the package.
EXACT_TOL = 1e-9

_UNITARY_TOL = 1e-12


class SimulationError(ValueError):
    """Invalid gate, register or state."""


def ceil_log2(p: int) -> int:
    """Smallest m >= 1 with 2**m >= p."""
    if p < 1:
        raise SimulationError(f"order must be positive, got {p}")
    return max(1, (p - 1).bit_length())


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __init__(self, registers: Iterable[tuple[str, int]]):
        regs = tuple((str(n), int(w)) for n, w in registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise SimulationError(f"duplicate register names in {names}")
        for name, width in regs:
            if width < 1:
                raise SimulationError(f"register {name!r} has width {width}")
        object.__setattr__(self, "registers", regs)

    @property
    def total_qubits(self) -> int:
        return sum(w for _, w in self.registers)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.registers]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(1 << w for _, w in self.registers)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def width(self, name: str) -> int:
        for n, w in self.registers:
            if n == name:
                return w
        raise SimulationError(f"unknown register {name!r}")

    def offset(self, name: str) -> int:
        """Global index of the register's most significant qubit."""
        off = 0
        for n, w in self.registers:
            if n == name:
                return off
            off += w
        raise SimulationError(f"unknown register {name!r}")

    def shift(self, name: str) -> int:
        """Bit position of the register's least significant qubit."""
        return self.total_qubits - self.offset(name) - self.width(name)

    def qubit(self, name: str, place: int) -> int:
        """Global qubit index of the bit with value ``2**place``."""
        width = self.width(name)
        if not 0 <= place < width:
            raise SimulationError(f"register {name!r} has no bit {place}")
        return self.offset(name) + width - 1 - place

    def qubits(self, name: str) -> list[int]:
        """Global qubits of a register, least significant first."""
        return [self.qubit(name, j) for j in range(self.width(name))]

    def pattern(self, **values: int) -> tuple[tuple[int, int], ...]:
        """Qubit/bit pairs fixing each named register to a value."""
        out = []
        for name, value in values.items():
            width = self.width(name)
            if not 0 <= value < (1 << width):
                raise SimulationError(f"value {value} does not fit {name!r}")
            out.extend((self.qubit(name, j), (value >> j) & 1)
                       for j in range(width))
        return tuple(out)

    def index(self, **values: int) -> int:
        """Flat amplitude index of a register assignment (missing = 0)."""
        unknown = set(values) - set(self.names)
        if unknown:
            raise SimulationError(f"unknown registers {sorted(unknown)}")
        idx = 0
        for name, width in self.registers:
            value = values.get(name, 0)
            if not 0 <= value < (1 << width):
                raise SimulationError(f"value {value} does not fit {name!r}")
            idx = (idx << width) | value
        return idx

    def values(self, index: int) -> dict[str, int]:
        out = {}
        for name, width in reversed(self.registers):
            out[name] = index & ((1 << width) - 1)
            index >>= width
        return dict(reversed(list(out.items())))


# -- gates -------------------------------------------------------------------


def _param_key(kind: str, angle: float) -> tuple[str, float]:
    # a gate and its inverse carry the same parameter
    a = float(angle) % (2 * np.pi)
    a = min(a, 2 * np.pi - a)
    return (kind, round(a, 12))


@dataclass(frozen=True, eq=False)
class SingleQubitGate:
    """2x2 unitary on one qubit, optionally conditioned on control bits."""

    qubit: int
    matrix: np.ndarray
    controls: tuple[tuple[int, int], ...] = ()
    label: str = "u"
    param: tuple | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise SimulationError(f"gate matrix must be 2x2, got {m.shape}")
        if np.abs(m.conj().T @ m - np.eye(2)).max() > _UNITARY_TOL:
            raise SimulationError(f"gate {self.label!r} is not unitary")
        if any(q == self.qubit for q, _ in self.controls):
            raise SimulationError("target qubit is also a control")
        object.__setattr__(self, "matrix", m)

    def inverse(self) -> "SingleQubitGate":
        return SingleQubitGate(self.qubit, self.matrix.conj().T, self.controls,
                               self.label, self.param)

    @property
    def qubits_used(self) -> list[int]:
        return [self.qubit] + [q for q, _ in self.controls]


@dataclass(frozen=True, eq=False)
class PhaseGate:
    """Multiply by ``exp(i*angle)`` every basis state matching ``pattern``.

    A controlled phase is the all-ones pattern on control and target; a
    reflection about ``|0...0>`` is the all-zeros pattern.
    """

    pattern: tuple[tuple[int, int], ...]
    angle: float
    label: str = "phase"

    def inverse(self) -> "PhaseGate":
        return PhaseGate(self.pattern, -self.angle, self.label)

    @property
    def param(self) -> tuple[str, float]:
        return _param_key("phase", self.angle)

    @property
    def qubits_used(self) -> list[int]:
        return [q for q, _ in self.pattern]


def controlled_phase(controls: Sequence[int], target: int, angle: float,
                     label: str = "cphase") -> PhaseGate:
    return PhaseGate(tuple((q, 1) for q in controls) + ((target, 1),),
                     angle, label)


@dataclass(frozen=True, eq=False)
class PermutationGate:
    """Bijection on the joint values of several registers.

    ``table[v] = w`` maps the joint value ``v`` (first register most
    significant) to ``w``.
    """

    registers: tuple[str, ...]
    table: np.ndarray
    label: str = "perm"

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.ndim != 1:
            raise SimulationError("permutation table must be one-dimensional")
        if t.min(initial=0) < 0 or t.max(initial=0) >= t.size or \
                np.unique(t).size != t.size:
            raise SimulationError(f"permutation {self.label!r} is not a bijection")
        if len(set(self.registers)) != len(self.registers):
            raise SimulationError("permutation registers must be distinct")
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "registers", tuple(self.registers))

    @classmethod
    def from_function(cls, layout: RegisterLayout, registers: Sequence[str],
                      fn, label: str = "perm") -> "PermutationGate":
        """Build the table from a vectorised ``fn(*values) -> tuple``."""
        widths = [layout.width(r) for r in registers]
        grids = np.meshgrid(*[np.arange(1 << w, dtype=np.int64) for w in widths],
                            indexing="ij")
        outs = fn(*[g.reshape(-1) for g in grids])
        table = np.zeros(grids[0].size, dtype=np.int64)
        for w, o in zip(widths, outs):
            table = (table << w) | np.asarray(o, dtype=np.int64)
        return cls(tuple(registers), table, label)

    def inverse(self) -> "PermutationGate":
        return PermutationGate(self.registers, np.argsort(self.table), self.label)

    param = None


@dataclass(frozen=True, eq=False)
class RegisterUnitary:
    """Dense unitary on the full value space of one register."""

    register: str
    matrix: np.ndarray
    label: str = "unitary"
    param: tuple | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SimulationError("register unitary must be square")
        if np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() > 1e-10:
            raise SimulationError(f"gate {self.label!r} is not unitary")
        object.__setattr__(self, "matrix", m)

    def inverse(self) -> "RegisterUnitary":
        return RegisterUnitary(self.register, self.matrix.conj().T,
                               self.label, self.param)


GateOp = Union[SingleQubitGate, PhaseGate, PermutationGate, RegisterUnitary]


@dataclass(frozen=True)
class Circuit:
    """Ordered gates and sub-circuits; the label is tallied once per use."""

    ops: tuple = ()
    label: str | None = None

    def __init__(self, ops: Iterable = (), label: str | None = None):
        object.__setattr__(self, "ops", tuple(ops))
        object.__setattr__(self, "label", label)

    def inverse(self) -> "Circuit":
        return Circuit([op.inverse() for op in reversed(self.ops)], self.label)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit([self, other])

    def gates(self):
        for op in self.ops:
            if isinstance(op, Circuit):
                yield from op.gates()
            else:
                yield op

    def __len__(self) -> int:
        return sum(1 for _ in self.gates())


@dataclass
class GateLedger:
    """Per-label application counts and the set of continuous parameters."""

    counts: Counter = field(default_factory=Counter)
    params: set = field(default_factory=set)

    def copy(self) -> "GateLedger":
        return GateLedger(Counter(self.counts), set(self.params))


def hadamard(qubit: int) -> SingleQubitGate:
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    return SingleQubitGate(qubit, h, label="h")


def ry(qubit: int, theta: float, controls=(), label: str = "ry") -> SingleQubitGate:
    """SO(2) rotation ``|0> -> cos(theta)|0> + sin(theta)|1>``."""
    c, s = np.cos(theta), np.sin(theta)
    return SingleQubitGate(qubit, np.array([[c, -s], [s, c]]), tuple(controls),
                           label, _param_key("ry", theta))


def phase_shift(qubit: int, angle: float, label: str = "p") -> SingleQubitGate:
    return SingleQubitGate(qubit, np.diag([1, np.exp(1j * angle)]), (), label,
                           _param_key("phase", angle))


# -- phase-gate fusion ------------------------------------------------------------

_FUSE_MAX_QUBITS = 14


@dataclass(frozen=True, eq=False)
class _DiagonalRun:
    """Consecutive phase gates folded into one diagonal over ``qubits``."""

    gates: tuple
    qubits: tuple
    table: np.ndarray

    @classmethod
    def build(cls, gates) -> "_DiagonalRun":
        qubits = tuple(sorted({q for g in gates for q, _ in g.pattern}))
        where = {q: a for a, q in enumerate(qubits)}
        sub = np.arange(1 << len(qubits))
        angle = np.zeros(sub.size)
        for g in gates:
            hit = np.ones(sub.size, dtype=bool)
            for q, b in g.pattern:
                hit &= ((sub >> where[q]) & 1) == b
            angle[hit] += g.angle
        table = np.exp(1j * angle)
        table[angle == 0] = 1.0
        return cls(tuple(gates), qubits, table)


def _fused_ops(circuit: Circuit) -> list:
    """The circuit's ops with runs of two or more phase gates fused; cached
    on the (immutable) circuit."""
    cached = circuit.__dict__.get("_fused")
    if cached is not None:
        return cached
    out: list = []
    run: list = []
    span: set = set()

    def flush():
        if len(run) > 1:
            out.append(_DiagonalRun.build(run))
        else:
            out.extend(run)
        run.clear()
        span.clear()

    for op in circuit.ops:
        if isinstance(op, PhaseGate):
            qs = {q for q, _ in op.pattern}
            if len(span | qs) > _FUSE_MAX_QUBITS:
                flush()
            run.append(op)
            span.update(qs)
        else:
            flush()
            out.append(op)
    flush()
    object.__setattr__(circuit, "_fused", out)
    return out


# -- state -------------------------------------------------------------------


class StateVector:
    """Amplitudes over a :class:`RegisterLayout` plus a gate ledger.

    :meth:`apply` mutates in place and returns ``self``; the module-level
    :func:`apply_gate` is the copying variant.
    """

    def __init__(self, layout: RegisterLayout, amplitudes=None,
                 ledger: GateLedger | None = None):
        self.layout = layout
        size = 1 << layout.total_qubits
        if amplitudes is None:
            amps = np.zeros(size, dtype=np.complex128)
            amps[0] = 1.0
        else:
            amps = np.array(amplitudes, dtype=np.complex128, copy=True).reshape(-1)
            if amps.size != size:
                raise SimulationError(
                    f"expected {size} amplitudes for {layout.total_qubits} "
                    f"qubits, got {amps.size}")
        self.amplitudes = amps
        self.ledger = ledger if ledger is not None else GateLedger()
        self._scratch: np.ndarray | None = None

    @classmethod
    def basis(cls, layout: RegisterLayout, **values: int) -> "StateVector":
        s = cls(layout)
        s.amplitudes[0] = 0
        s.amplitudes[layout.index(**values)] = 1
        return s

    @classmethod
    def from_register(cls, layout: RegisterLayout, name: str, vector,
                      **others: int) -> "StateVector":
        """Product state: ``vector`` on register ``name``, basis values
        elsewhere."""
        vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
        if vector.size != 1 << layout.width(name):
            raise SimulationError(f"vector length does not match {name!r}")
        s = cls(layout)
        s.amplitudes[0] = 0
        base = layout.index(**others)
        stride = 1 << layout.shift(name)
        s.amplitudes[base + stride * np.arange(vector.size)] = vector
        return s

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes, self.ledger.copy())

    @property
    def nqubits(self) -> int:
        return self.layout.total_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, **values: int) -> complex:
        return complex(self.amplitudes[self.layout.index(**values)])

    def tensor(self) -> np.ndarray:
        """Amplitudes as an array with one axis per register."""
        return self.amplitudes.reshape(self.layout.dims)

    # -- gate application ----------------------------------------------------

    def apply(self, op) -> "StateVector":
        if isinstance(op, Circuit):
            if op.label is not None:
                self.ledger.counts[op.label] += 1
            for item in _fused_ops(op):
                if isinstance(item, _DiagonalRun):
                    self._apply_diagonal(item)
                else:
                    self.apply(item)
            return self
        nq = self.nqubits
        if isinstance(op, SingleQubitGate):
            self._check_qubits(op.qubits_used)
            kernels.apply_1q(self.amplitudes, nq - 1 - op.qubit, op.matrix,
                             [nq - 1 - q for q, _ in op.controls],
                             [b for _, b in op.controls])
        elif isinstance(op, PhaseGate):
            self._check_qubits(op.qubits_used)
            kernels.apply_phase(self.amplitudes, [nq - 1 - q for q, _ in op.pattern],
                                [b for _, b in op.pattern], np.exp(1j * op.angle))
        elif isinstance(op, PermutationGate):
            widths = [self.layout.width(r) for r in op.registers]
            if op.table.size != 1 << sum(widths):
                raise SimulationError(
                    f"permutation {op.label!r} table does not match registers")
            if self._scratch is None:
                self._scratch = np.empty_like(self.amplitudes)
            kernels.permute(self.amplitudes, self._scratch,
                            [self.layout.shift(r) for r in op.registers],
                            widths, op.table)
            self.amplitudes, self._scratch = self._scratch, self.amplitudes
        elif isinstance(op, RegisterUnitary):
            dims = self.layout.dims
            a = self.layout.names.index(op.register)
            if op.matrix.shape[0] != dims[a]:
                raise SimulationError(f"unitary {op.label!r} does not match "
                                      f"register {op.register!r}")
            t = self.amplitudes.reshape(
                int(np.prod(dims[:a])), dims[a], int(np.prod(dims[a + 1:])))
            self.amplitudes = np.ascontiguousarray(
                np.einsum("ij,ajb->aib", op.matrix, t)).reshape(-1)
        else:
            raise SimulationError(f"unsupported operation {op!r}")
        self.ledger.counts[op.label] += 1
        if op.param is not None:
            self.ledger.params.add(op.param)
        return self

    def _apply_diagonal(self, run: "_DiagonalRun") -> None:
        nq = self.nqubits
        self._check_qubits(run.qubits)
        kernels.apply_diagonal(self.amplitudes, [nq - 1 - q for q in run.qubits],
                               run.table)
        for g in run.gates:
            self.ledger.counts[g.label] += 1
            self.ledger.params.add(g.param)

    def _check_qubits(self, qubits: Sequence[int]) -> None:
        nq = self.nqubits
        for q in qubits:
            if not 0 <= q < nq:
                raise SimulationError(f"qubit {q} out of range for {nq} qubits")
        if len(set(qubits)) != len(qubits):
            raise SimulationError("gate uses a qubit twice")

    # -- analysis --------------------------------------------------------------

    def distribution(self, *registers: str) -> np.ndarray:
        """Exact marginal probabilities over the given registers (joint array
        with one axis per register, in the order given)."""
        names = self.layout.names
        for r in registers:
            if r not in names:
                raise SimulationError(f"unknown register {r!r}")
        probs = np.abs(self.tensor()) ** 2
        keep = [names.index(r) for r in registers]
        other = tuple(a for a in range(len(names)) if a not in keep)
        marg = probs.sum(axis=other)
        kept_sorted = sorted(keep)
        return np.transpose(marg, [kept_sorted.index(a) for a in keep])

    def probability(self, **values: int) -> float:
        """Probability that the named registers hold the given values."""
        names = self.layout.names
        index = [slice(None)] * len(names)
        for name, value in values.items():
            index[names.index(name)] = value
        return float(np.sum(np.abs(self.tensor()[tuple(index)]) ** 2))

    def condition(self, name: str, value: int) -> tuple[float, "StateVector"]:
        """Project register ``name`` onto ``value``, renormalise, and drop
        the register. Returns (probability, reduced state)."""
        names = self.layout.names
        a = names.index(name)
        sub = np.take(self.tensor(), value, axis=a)
        prob = float(np.sum(np.abs(sub) ** 2))
        layout = RegisterLayout([r for r in self.layout.registers if r[0] != name])
        if prob == 0:
            raise SimulationError(f"register {name!r} never holds {value}")
        return prob, StateVector(layout, sub / np.sqrt(prob), self.ledger.copy())

    def register_vector(self, name: str, **others: int) -> np.ndarray:
        """Slice of amplitudes along ``name`` with all other registers fixed
        (missing registers default to 0)."""
        names = self.layout.names
        index = tuple(slice(None) if n == name else others.get(n, 0) for n in names)
        return self.tensor()[index].copy()

    def reduced_density(self, name: str) -> np.ndarray:
        names = self.layout.names
        a = names.index(name)
        t = np.moveaxis(self.tensor(), a, 0).reshape(self.layout.dims[a], -1)
        return t @ t.conj().T

    def support_violation(self, name: str, bound: int) -> float:
        """Probability mass on values >= bound in register ``name``."""
        return float(self.distribution(name)[bound:].sum())

    def __repr__(self) -> str:
        return f"StateVector({self.layout.registers}, norm={self.norm():.12f})"


def apply_gate(state: StateVector, gate) -> StateVector:
    """Return a new state with ``gate`` applied; ``state`` is untouched."""
    return state.copy().apply(gate)


def distribution(state: StateVector, register: str) -> np.ndarray:
    return state.distribution(register)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for states on the same layout."""
    if a.layout != b.layout:
        raise SimulationError("fidelity requires identical layouts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def vector_fidelity(u, v) -> float:
    return float(abs(np.vdot(np.asarray(u), np.asarray(v))) ** 2)
