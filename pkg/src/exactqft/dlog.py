"""Exact discrete logarithms on top of the exact order-q Fourier transform.

The group is simulated in exponent space: an element ``alpha**e`` is stored as
``e mod q``, so the oracle is the map ``(x, y) -> x + a*y mod q``. Measurement
is exact conditioning: every outcome with nonzero probability is enumerated
as a branch instead of being sampled.

Register plan (most significant first): ``x, y, f, pred, tag``. ``f`` receives
the oracle value; ``pred`` is scratch for the good-set test; ``tag`` is the
partial-tag qubit used to damp the good probability to exactly 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from sympy import factorint, isprime, totient

from .estimation import qft_pow2_circuit
from .exact_qft import MAX_QUBITS, ResourceError, qft_circuit_matrix, tune_ancilla
from .sim import (
    Circuit,
    PermutationGate,
    PhaseGate,
    RegisterLayout,
    RegisterUnitary,
    SimulationError,
    StateVector,
    _param_key,
    ceil_log2,
    hadamard,
    ry,
)
from .state_prep import build_cascade, cascade_circuit, dft_matrix

BRANCH_TOL = 1e-12

#: tag angles for boundary weights 1/4, 1/2, 3/4
TAG_ANGLES = {Fraction(1, 4): math.pi / 6, Fraction(1, 2): math.pi / 4,
              Fraction(3, 4): math.pi / 3}


class DlogError(SimulationError):
    pass


# -- oracle ---------------------------------------------------------------------


class _Oracle:
    q: int

    def exponent(self, x, y):
        raise NotImplementedError

    def verify(self, c: int) -> bool:
        """``alpha**c == beta`` in this oracle's labelling."""
        return int(self.exponent(c, 0)) == int(self.exponent(0, 1))

    def relabel(self, x_scale: int = 1, y_shift: int = 0) -> "RelabelledOracle":
        """Oracle for generators ``alpha**x_scale`` and ``beta*alpha**y_shift``."""
        return RelabelledOracle(self, x_scale, y_shift)


class CyclicGroupOracle(_Oracle):
    """``(x, y) -> exponent of alpha**x * beta**y`` with ``beta = alpha**a``.

    The hidden exponent is only used inside :meth:`exponent`.
    """

    def __init__(self, q: int, a: int, generator: str = "alpha", target: str = "beta"):
        if q < 2:
            raise DlogError(f"group order must be at least 2, got {q}")
        self.q = q
        self.generator = generator
        self.target = target
        self.__a = a % q

    def exponent(self, x, y):
        return (np.asarray(x, dtype=np.int64) + self.__a * np.asarray(y, dtype=np.int64)) % self.q

    def __repr__(self) -> str:
        return f"CyclicGroupOracle(q={self.q}, {self.target}={self.generator}^a)"


class RelabelledOracle(_Oracle):
    def __init__(self, parent: _Oracle, x_scale: int, y_shift: int):
        self.parent = parent
        self.q = parent.q
        self.x_scale = x_scale
        self.y_shift = y_shift

    def exponent(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        return self.parent.exponent((self.x_scale * x + self.y_shift * y) % self.q, y)


# -- outcome ----------------------------------------------------------------------


@dataclass
class DlogOutcome:
    exponent: int | None
    success: bool
    probability: float
    base_probability: float | None = None
    pre_amplification: float | None = None
    rounds: int = 1
    transcript: list = field(default_factory=list)
    params: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "success": self.success,
            "probability": self.probability,
            "base_probability": self.base_probability,
            "pre_amplification": self.pre_amplification,
            "rounds": self.rounds,
            "transcript": self.transcript,
        }


# -- circuits -----------------------------------------------------------------------


def dlog_layout(q: int) -> RegisterLayout:
    m = ceil_log2(q)
    return RegisterLayout([("x", m), ("y", m), ("f", m), ("pred", 1), ("tag", 1)])


@lru_cache(maxsize=None)
def _circuit_qft(q: int) -> tuple[np.ndarray, frozenset]:
    mat, params = qft_circuit_matrix(q)
    return mat, frozenset(params)


def qft_gate(register: str, q: int, provider: str = "dft") -> tuple[RegisterUnitary, set]:
    """Order-q Fourier transform on one register and the gate parameters it
    stands for.

    ``dft`` uses the analytic matrix. ``circuit`` uses the matrix realised by
    simulating the exact-QFT circuit on every basis input (small q only).
    """
    if provider == "dft":
        return (RegisterUnitary(register, dft_matrix(q), "qft", ("dft", q)),
                {("dft", q)})
    if provider == "circuit":
        mat, params = _circuit_qft(q)
        return RegisterUnitary(register, mat, "qft"), set(params)
    raise DlogError(f"unknown QFT provider {provider!r}")


def oracle_gate(layout: RegisterLayout, oracle: _Oracle) -> PermutationGate:
    q = oracle.q

    def fn(x, y, f):
        valid = (x < q) & (y < q)
        e = np.where(valid, oracle.exponent(np.where(valid, x, 0), np.where(valid, y, 0)), 0)
        return x, y, f ^ e
    return PermutationGate.from_function(layout, ("x", "y", "f"), fn, "oracle")


def algorithm_circuit(layout: RegisterLayout, oracle: _Oracle,
                      provider: str = "dft") -> tuple[Circuit, set]:
    """Uniform x and y, oracle into f, QFT_q on x and on y."""
    q = oracle.q
    cascade = build_cascade(q, layout.width("x"))
    qx, params = qft_gate("x", q, provider)
    qy, _ = qft_gate("y", q, provider)
    circ = Circuit([cascade_circuit(cascade, layout, "x"),
                    cascade_circuit(cascade, layout, "y"),
                    oracle_gate(layout, oracle), qx, qy], label="dlog")
    return circ, params


def _indicator(layout: RegisterLayout, good: Callable, target: str, label: str):
    return PermutationGate.from_function(
        layout, ("x", target), lambda x, t: (x, t ^ good(x).astype(np.int64)), label)


def _amplify(layout: RegisterLayout, algorithm: Circuit, tag: Circuit,
             good: Callable) -> Circuit:
    A = Circuit([algorithm, tag], label="A")
    pred = _indicator(layout, good, "pred", "predicate")
    mark = Circuit([pred, PhaseGate(layout.pattern(pred=1, tag=1), math.pi, "mark_good"),
                    pred.inverse()], label="reflect_good")
    zero = PhaseGate(layout.pattern(**{r: 0 for r in layout.names}), math.pi,
                     "reflect_zero")
    return Circuit([A, mark, A.inverse(), zero, A], label="amplify")


@dataclass
class _Round:
    branches: list  # (u, v, probability)
    base: float  # probability of the good set before tagging
    pre: float  # good probability after tagging
    post: float  # good probability after amplification
    params: set


def _run_round(oracle: _Oracle, good: Callable, tag_fn: Callable[[RegisterLayout], Circuit],
               provider: str) -> _Round:
    layout = dlog_layout(oracle.q)
    if layout.total_qubits > MAX_QUBITS:
        raise ResourceError(f"order {oracle.q} needs {layout.total_qubits} qubits")
    algo, params = algorithm_circuit(layout, oracle, provider)
    tag = tag_fn(layout)

    def good_probability(state: StateVector) -> float:
        joint = state.distribution("x", "tag")
        mask = good(np.arange(joint.shape[0]))
        return float(joint[mask, 1].sum())

    s = StateVector(layout).apply(algo)
    xdist = s.distribution("x")
    base = float(xdist[good(np.arange(xdist.size))].sum())
    s.apply(tag)
    pre = good_probability(s)
    final = StateVector(layout).apply(_amplify(layout, algo, tag, good))
    post = good_probability(final)
    joint = final.distribution("x", "y")
    branches = [(int(u), int(v), float(joint[u, v]))
                for u, v in zip(*np.nonzero(joint > BRANCH_TOL))]
    return _Round(branches, base, pre, post, set(final.ledger.params) | params)


def _uniform_tag(alpha: float) -> Callable[[RegisterLayout], Circuit]:
    def build(layout):
        return Circuit([ry(layout.qubit("tag", 0), alpha, label="tag")], label="tag")
    return build


# -- prime order ------------------------------------------------------------------


def _require_prime(p: int) -> None:
    if not isprime(p):
        raise DlogError(f"{p} is not prime; use the composite-order path")


def dlog_state(p: int, oracle: _Oracle, x0: int = 0) -> StateVector:
    """Uniform ``(x, y)`` with the oracle value computed and then conditioned
    on ``x0``: ``sum_y |x0 - a*y, y> / sqrt(p)`` on registers ``x, y``."""
    _require_prime(p)
    if oracle.q != p:
        raise DlogError(f"oracle order {oracle.q} differs from {p}")
    layout = dlog_layout(p)
    cascade = build_cascade(p, layout.width("x"))
    s = StateVector(layout).apply(Circuit([
        cascade_circuit(cascade, layout, "x"), cascade_circuit(cascade, layout, "y"),
        oracle_gate(layout, oracle)], label="dlog_prepare"))
    _, s = s.condition("f", x0)
    _, s = s.condition("pred", 0)
    _, s = s.condition("tag", 0)
    return s


def conditioned_output(oracle: _Oracle, f_value: int, provider: str = "dft") -> StateVector:
    """State of ``x, y`` after both Fourier transforms, conditioned on the
    oracle register holding ``f_value``."""
    layout = dlog_layout(oracle.q)
    algo, _ = algorithm_circuit(layout, oracle, provider)
    s = StateVector(layout).apply(algo)
    _, s = s.condition("f", f_value)
    _, s = s.condition("pred", 0)
    _, s = s.condition("tag", 0)
    return s


def dlog_run(p: int, oracle: _Oracle, x0: int | None = None,
             provider: str = "dft") -> np.ndarray:
    """Exact distribution of the measured pair ``(x, y)`` as a ``p x p``
    array; marginal over the oracle value unless ``x0`` is given."""
    _require_prime(p)
    if x0 is not None:
        s = conditioned_output(oracle, x0, provider)
        return s.distribution("x", "y")[:p, :p]
    layout = dlog_layout(p)
    algo, _ = algorithm_circuit(layout, oracle, provider)
    return StateVector(layout).apply(algo).distribution("x", "y")[:p, :p]


def _pair_transcript(branches, q: int, oracle: _Oracle) -> tuple[list, float, set]:
    rows, prob, found = [], 0.0, set()
    for u, v, w in branches:
        g = math.gcd(u, q)
        a = (v * pow(u, -1, q)) % q if g == 1 else None
        ok = a is not None and oracle.verify(a)
        rows.append({"pair": [u, v], "probability": w, "gcd": g, "exponent": a,
                     "verified": ok})
        if ok:
            prob += w
            found.add(a)
    return rows, prob, found


def _outcome_from_round(rnd: _Round, q: int, oracle: _Oracle) -> DlogOutcome:
    rows, prob, found = _pair_transcript(rnd.branches, q, oracle)
    exponent = found.pop() if len(found) == 1 else None
    return DlogOutcome(exponent, exponent is not None and prob > 1 - 1e-10, prob,
                       rnd.base, rnd.pre, 1, rows, rnd.params)


def dlog_exact(p: int, oracle: _Oracle, provider: str = "dft") -> DlogOutcome:
    """Prime order: damp ``x != 0`` (probability ``1 - 1/p``) to 1/4 and
    amplify once, so every branch yields the exponent."""
    if p == 2:
        a = int(oracle.exponent(0, 1))
        return DlogOutcome(a, oracle.verify(a), 1.0, transcript=[{"classical": True}])
    _require_prime(p)
    if oracle.q != p:
        raise DlogError(f"oracle order {oracle.q} differs from {p}")
    alpha = tune_ancilla(1 - 1 / p)
    rnd = _run_round(oracle, lambda x: (x > 0) & (x < p), _uniform_tag(alpha), provider)
    return _outcome_from_round(rnd, p, oracle)


# -- composite order --------------------------------------------------------------


def validate_factorization(q: int, factors: Sequence[int] | Mapping[int, int]) -> list[int]:
    """Distinct primes of ``q`` from a list of prime powers or a
    ``{prime: exponent}`` map; raises on anything inconsistent."""
    if isinstance(factors, Mapping):
        powers = [pr ** e for pr, e in factors.items()]
    else:
        powers = list(factors)
    primes = []
    for f in powers:
        fac = factorint(f)
        if f < 2 or len(fac) != 1:
            raise DlogError(f"{f} is not a prime power")
        primes.extend(fac)
    if len(set(primes)) != len(primes):
        raise DlogError("factors must be powers of distinct primes")
    if math.prod(powers) != q:
        raise DlogError(f"factors {powers} do not multiply to {q}")
    return sorted(primes)


def dlog_composite(q: int, factors, oracle: _Oracle, provider: str = "dft") -> DlogOutcome:
    """Known factorization: good set ``gcd(x, q) = 1`` has probability
    ``phi(q)/q``; damped to 1/4 and amplified once."""
    if q % 2 == 0:
        raise DlogError(f"even order {q} is not supported")
    primes = validate_factorization(q, factors)
    if oracle.q != q:
        raise DlogError(f"oracle order {oracle.q} differs from {q}")
    phi = q
    for pr in primes:
        phi = phi // pr * (pr - 1)
    alpha = tune_ancilla(phi / q)
    xs = np.arange(1 << ceil_log2(q))
    coprime = np.array([math.gcd(int(v), q) == 1 and v < q for v in xs])
    rnd = _run_round(oracle, lambda x: coprime[x], _uniform_tag(alpha), provider)
    out = _outcome_from_round(rnd, q, oracle)
    out.transcript.insert(0, {"phi": phi, "primes": primes})
    return out


def phi_fraction(q: int) -> Fraction:
    return Fraction(int(totient(q)), q)


# -- unknown factorization ---------------------------------------------------------


def retention_weights(d: int) -> dict[int, Fraction]:
    """Weights on ``k in 0..d-1`` summing to ``d/4``: the top quarter kept
    fully, the next value partially."""
    full = d - math.ceil(3 * d / 4)
    weights = {k: Fraction(1) for k in range(d - full, d)}
    rest = Fraction(d, 4) - full
    if rest:
        weights[d - full - 1] = rest
    return weights


def _descent_tag(M: int, weights: dict[int, Fraction]) -> Callable[[RegisterLayout], Circuit]:
    def build(layout):
        full = {k * M for k, w in weights.items() if w == 1}
        ops = [PermutationGate.from_function(
            layout, ("x", "tag"),
            lambda x, t: (x, t ^ np.isin(x, list(full)).astype(np.int64)), "tag_flip")]
        for k, w in weights.items():
            if w != 1:
                ops.append(ry(layout.qubit("tag", 0), TAG_ANGLES[w],
                              layout.pattern(x=k * M), "tag"))
        return Circuit(ops, label="tag")
    return build


def descent_setup_params(q: int, provider: str = "dft") -> set:
    """Gate parameters fixed by ``q`` alone, plus the boundary tag angles."""
    layout = dlog_layout(q)
    params = {g.param for g in cascade_circuit(build_cascade(q, layout.width("x")),
                                               layout, "x").gates()}
    params |= qft_gate("x", q, provider)[1]
    params.add(_param_key("ry", tune_ancilla(1 - 1 / q)))
    params |= {_param_key("ry", a) for a in TAG_ANGLES.values()}
    # permutation and reflection gates carry no continuous parameter; the
    # reflections are phase pi
    params.add(_param_key("phase", math.pi))
    return params


def dlog_descent(q: int, oracle: _Oracle, provider: str = "dft") -> DlogOutcome:
    """Recover the exponent without knowing the factors of ``q``.

    Each round measures ``(k*M, a''*k*M mod q)`` where ``M`` is the part of the
    order already resolved and ``a'' = (a - known)/M``. ``g = gcd(k, D)``
    reveals ``a'' mod D/g`` and the next round works on order ``g``. Round one
    only removes ``k = 0``; later rounds keep the top quarter of ``k`` so
    ``g <= D/4``. Every measurement branch is followed.
    """
    if q % 2 == 0 or q < 3:
        raise DlogError(f"order must be odd and at least 3, got {q}")
    max_depth = ceil_log2(q)
    cache: dict[tuple[int, int], _Round] = {}
    leaves: list[dict] = []
    used: set = set()

    def round_for(M: int, known: int, D: int) -> _Round:
        key = (M, known)
        if key not in cache:
            sub = oracle.relabel(M, -known % q)
            if M == 1:
                good = lambda x: (x > 0) & (x < q)  # noqa: E731
                tag = _uniform_tag(tune_ancilla(1 - 1 / q))
            else:
                weights = retention_weights(D)
                keep = np.zeros(1 << ceil_log2(q), dtype=bool)
                keep[[k * M for k in weights]] = True
                good = keep.__getitem__
                tag = _descent_tag(M, weights)
            cache[key] = _run_round(sub, good, tag, provider)
        return cache[key]

    def explore(M: int, D: int, known: int, weight: float, path: list) -> None:
        if D == 1:
            a = known % q
            leaves.append({"path": path, "probability": weight, "exponent": a,
                           "verified": oracle.verify(a), "rounds": len(path)})
            return
        if len(path) >= max_depth:
            leaves.append({"path": path, "probability": weight, "exponent": None,
                           "verified": False, "rounds": len(path)})
            return
        rnd = round_for(M, known, D)
        used.update(rnd.params)
        for u, v, w in rnd.branches:
            if u % M or v % M:
                raise DlogError(f"pair ({u}, {v}) is off the order-{D} lattice")
            k, c = u // M, v // M
            g = math.gcd(k, D)
            rest = D // g
            part = (c // g) * pow(k // g, -1, rest) % rest if rest > 1 else 0
            step = {"order": D, "pair": [u, v], "probability": w, "gcd": g,
                    "learned": [part, rest], "pre_amplification": rnd.pre,
                    "post_amplification": rnd.post}
            explore(M * rest, g, known + M * part, weight * w, path + [step])

    explore(1, q, 0, 1.0, [])
    ok = [leaf for leaf in leaves if leaf["verified"]]
    found = {leaf["exponent"] for leaf in ok}
    prob = sum(leaf["probability"] for leaf in ok)
    exponent = found.pop() if len(found) == 1 else None
    allowed = descent_setup_params(q, provider)
    stray = used - allowed
    success = (exponent is not None and len(ok) == len(leaves)
               and abs(prob - 1) < 1e-10 and not stray)
    return DlogOutcome(exponent, success, prob, rounds=max(l["rounds"] for l in leaves),
                       transcript=leaves, params=used)


# -- power-of-two transform with uniformised instance ---------------------------


@dataclass(frozen=True)
class Pow2Experiment:
    p: int
    n: int
    average: float
    per_r: tuple[float, ...]

    @property
    def spread(self) -> float:
        return max(self.per_r) - min(self.per_r)


def pow2_decode(u, p: int, N: int):
    """Nearest multiple of ``N/p``: ``round(u*p/N) mod p``."""
    return ((2 * np.asarray(u) * p + N) // (2 * N)) % p


def _pow2_success(p: int, n: int, oracle: _Oracle, r: int) -> float:
    m = ceil_log2(p)
    layout = RegisterLayout([("x", n), ("y", n), ("f", m)])
    sub = oracle.relabel(1, r)

    def fn(x, y, f):
        return x, y, f ^ sub.exponent(x % p, y % p)
    N = 1 << n
    circ = Circuit([hadamard(q) for q in layout.qubits("x") + layout.qubits("y")]
                   + [PermutationGate.from_function(layout, ("x", "y", "f"), fn, "oracle"),
                      qft_pow2_circuit(layout, "x"), qft_pow2_circuit(layout, "y")],
                   label="dlog_pow2")
    joint = StateVector(layout).apply(circ).distribution("x", "y")
    u = pow2_decode(np.arange(N), p, N)
    total = 0.0
    for iu in range(N):
        xu = int(u[iu])
        if xu == 0:
            continue
        inv = pow(xu, -1, p)
        cand = (u * inv - r) % p
        hits = np.nonzero([oracle.verify(int(c)) for c in cand])[0]
        total += float(joint[iu, hits].sum())
    return total


def uniformised_dlog_pow2(p: int, n: int, oracle: _Oracle) -> Pow2Experiment:
    """Dlog circuit with QFT_{2^n} in place of QFT_p, the target replaced by
    ``beta*alpha**r``, and the success probability averaged exactly over all
    ``r``. Brute force; desk-scale only."""
    _require_prime(p)
    if p > 31:
        raise ResourceError(f"p={p} is beyond the brute-force range (<= 31)")
    if 2 * n + ceil_log2(p) > MAX_QUBITS:
        raise ResourceError(f"n={n} needs {2 * n + ceil_log2(p)} qubits")
    per_r = tuple(_pow2_success(p, n, oracle, r) for r in range(p))
    return Pow2Experiment(p, n, sum(per_r) / p, per_r)
