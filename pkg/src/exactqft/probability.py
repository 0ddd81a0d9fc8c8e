"""Classical numerics for the success probability of eigenvalue estimation.

The averaged success probability is

    pbar(p, N) = (1/p) * sum_{k<p} f(k/p)**2,   f(z) = sin(pi z) / (N sin(pi z/N)).

Two independent routes compute it to ``d`` digits: a brute-force interval sum
(:func:`avg_success_hp`) and a truncated power series whose powers of ``z``
are summed with exact sum-of-powers polynomials (:func:`avg_success_series`).
The series route costs polynomially many terms in ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal, localcontext
from fractions import Fraction
from functools import lru_cache

import mpmath

#: Large-p, large-N limit of pbar quoted for comparison.
PBAR_LIMIT = 0.4514


class ProbabilityError(ValueError):
    pass


def _check_coprime(p: int, N: int) -> None:
    if p < 1 or N < 1:
        raise ProbabilityError(f"invalid order/size p={p}, N={N}")
    if math.gcd(p, N) != 1:
        raise ProbabilityError(f"gcd(N={N}, p={p}) != 1")


# -- peak function -------------------------------------------------------------


def f_eval(z: float, N: int | None = None) -> float:
    """``sin(pi z)/(N sin(pi z/N))``; ``N=None`` gives the limit ``sin(pi z)/(pi z)``."""
    if N is not None and abs(z) >= N:
        raise ProbabilityError(f"|z| = {abs(z)} must be below N = {N}")
    if z == 0:
        return 1.0
    if N is None:
        return math.sin(math.pi * z) / (math.pi * z)
    return math.sin(math.pi * z) / (N * math.sin(math.pi * z / N))


def p_x(x: int, p: int, N: int) -> float:
    """Success probability of the filtered estimator on ``Psi_x``."""
    if not 0 <= x < p:
        raise ProbabilityError(f"x={x} outside 0..{p - 1}")
    if N <= p:
        raise ProbabilityError(f"need N > p (N={N}, p={p})")
    return f_eval((x * N % p) / p, N) ** 2


def avg_success_bruteforce(p: int, N: int) -> float:
    """Mean of :func:`p_x` over x, cross-checked against the reindexed sum
    over ``k/p``."""
    _check_coprime(p, N)
    if N <= p:
        raise ProbabilityError(f"need N > p (N={N}, p={p})")
    by_x = math.fsum(p_x(x, p, N) for x in range(p)) / p
    by_k = math.fsum(f_eval(k / p, N) ** 2 for k in range(p)) / p
    if abs(by_x - by_k) >= 1e-12:  # pragma: no cover - would mean N, p not coprime
        raise AssertionError(f"reindexing mismatch {by_x} vs {by_k}")
    return by_k


# -- precision values ------------------------------------------------------------


@dataclass(frozen=True)
class PrecisionDecimal:
    """High-precision ``value`` reported to ``digits`` decimal places.

    ``error_bound`` bounds ``|value - true value|``; the reported digits are
    ``value`` truncated toward zero.
    """

    value: Decimal
    digits: int
    error_bound: Decimal

    def truncated(self) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = max(50, self.digits + 20)
            return self.value.quantize(Decimal(1).scaleb(-self.digits),
                                       rounding=ROUND_DOWN)

    def __str__(self) -> str:
        return str(self.truncated())

    def __float__(self) -> float:
        return float(self.value)

    def to_json(self) -> dict:
        return {"value": str(self), "digits": self.digits,
                "error_bound": f"{self.error_bound:.3e}"}


def _to_decimal(x: mpmath.mpf, digits: int) -> Decimal:
    return Decimal(mpmath.nstr(x, digits + 5, strip_zeros=False, min_fixed=-1e9,
                               max_fixed=1e9))


def avg_success_hp(p: int, N: int, d: int) -> PrecisionDecimal:
    """Brute-force ``pbar`` in interval arithmetic at ``d + 10`` digits."""
    _check_coprime(p, N)
    if d < 1:
        raise ProbabilityError("digits must be positive")
    iv = mpmath.iv
    old = iv.dps
    iv.dps = d + 10
    try:
        total = iv.mpf(1)  # k = 0
        pi = iv.pi
        for k in range(1, p):
            z = iv.mpf(k) / p
            f = iv.sin(pi * z) / (N * iv.sin(pi * z / N))
            total += f * f
        total /= p
        mid = total.mid
        rad = total.delta / 2
        with mpmath.workdps(d + 10):
            value = _to_decimal(mpmath.mpf(mid), d + 10)
            err = Decimal(mpmath.nstr(mpmath.mpf(rad) + mpmath.mpf(10) ** (-(d + 12)), 5))
    finally:
        iv.dps = old
    return PrecisionDecimal(value, d, err)


# -- sums of powers ----------------------------------------------------------------


@lru_cache(maxsize=None)
def faulhaber(m: int) -> tuple[Fraction, ...]:
    """Coefficients ``A[0..m+1]`` with ``sum_{k=0}^{p-1} k**m = sum_i A[i] p**i``.

    Solves ``S(p+1) - S(p) = p**m`` with ``S(0) = 0``: matching the
    coefficient of ``p**j`` gives ``sum_{i>j} A[i]*C(i, j) = [j == m]``, a
    triangular system solved from ``j = m`` downward.
    """
    if m < 0:
        raise ProbabilityError("power must be non-negative")
    A = [Fraction(0)] * (m + 2)
    for j in range(m, -1, -1):
        rhs = Fraction(1 if j == m else 0)
        for i in range(j + 2, m + 2):
            rhs -= A[i] * math.comb(i, j)
        A[j + 1] = rhs / (j + 1)
    return tuple(A)


def faulhaber_sum(m: int, p: int) -> Fraction:
    return sum((a * p ** i for i, a in enumerate(faulhaber(m))), Fraction(0))


@dataclass(frozen=True)
class FaulhaberTable:
    m_max: int

    @property
    def coefficients(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(faulhaber(m) for m in range(self.m_max + 1))

    def __call__(self, m: int, p: int) -> Fraction:
        if m > self.m_max:
            raise ProbabilityError(f"power {m} exceeds table size {self.m_max}")
        return faulhaber_sum(m, p)


# -- power series ------------------------------------------------------------------


@lru_cache(maxsize=None)
def f_squared_series(N: int, J: int) -> tuple[Fraction, ...]:
    """Rational ``F[j]`` with ``f(z)**2 = sum_j F[j] * (pi z)**(2j)`` up to ``j = J``.

    ``f(z) = S(t)/S(t/N**2)`` with ``t = (pi z)**2`` and
    ``S(t) = sin(sqrt t)/sqrt t = sum_k (-1)**k t**k / (2k+1)!``.
    """
    s = [Fraction((-1) ** k, math.factorial(2 * k + 1)) for k in range(J + 1)]
    sn = [c / N ** (2 * k) for k, c in enumerate(s)]
    rec = [Fraction(1)] + [Fraction(0)] * J
    for j in range(1, J + 1):
        rec[j] = -sum(sn[i] * rec[j - i] for i in range(1, j + 1))
    g = [sum(s[i] * rec[j - i] for i in range(j + 1)) for j in range(J + 1)]
    return tuple(sum(g[i] * g[j - i] for i in range(j + 1)) for j in range(J + 1))


def _log10_sinhc(x: float) -> float:
    # log10(sinh(x)/x) without overflow
    if x < 1e-8:
        return 0.0
    return (x + math.log1p(-math.exp(-2 * x)) - math.log(2) - math.log(x)) / math.log(10)


def tail_bound_log10(N: int, J: int) -> float:
    """log10 of a bound on ``sum_{j>J} |b_j|`` where ``f(z)**2 = sum b_j z**(2j)``.

    ``f**2`` is analytic for ``|z| < N``; on ``|z| = R`` with ``x = pi R/N <= 2``
    we have ``|sin(pi z)/(pi z)| <= sinh(pi R)/(pi R)`` and
    ``|sin(w)/w| >= 2 - sinh|w|/|w|``, so Cauchy's estimate gives
    ``|b_j| <= B(R)**2 / R**(2j)``. The bound is minimised over a grid of radii.
    """
    best = math.inf
    r_max = 2 * N / math.pi
    for a in range(1, 201):
        R = 1.0 + (r_max - 1.0) * (a / 200) ** 2
        if R <= 1.0:
            continue
        x = math.pi * R / N
        denom = 2 - (math.sinh(x) / x if x > 1e-8 else 1.0)
        if denom <= 0:
            continue
        log_b = _log10_sinhc(math.pi * R) - math.log10(denom)
        tail = (2 * log_b - 2 * (J + 1) * math.log10(R)
                - math.log10(1 - R ** -2))
        best = min(best, tail)
    return best


def series_terms(N: int, d: int) -> int:
    """Smallest truncation order whose tail bound is below ``10**-(d+2)``."""
    J = 1
    while tail_bound_log10(N, J) > -(d + 2):
        J += 1
    return J


def avg_success_series(p: int, N: int, d: int) -> PrecisionDecimal:
    """``pbar`` from the truncated series in fixed-point arithmetic.

    ``pbar = sum_j F[j] * pi**(2j) * S_{2j}(p) / p**(2j+1)`` where each inner
    factor is an exact rational. The error bound is the Cauchy tail plus one
    half-ulp per term plus the propagated error of the ``pi**2`` constant.
    """
    _check_coprime(p, N)
    if d < 1:
        raise ProbabilityError("digits must be positive")
    J = series_terms(N, d)
    guard = 8 + math.ceil(math.log10(J + 1))
    D = d + guard
    F = f_squared_series(N, J)
    q = [F[j] * faulhaber_sum(2 * j, p) / Fraction(p) ** (2 * j + 1)
         for j in range(J + 1)]
    # pi**2 to E digits; E covers the growth of j * pi**(2j-2) * |q_j|
    growth = max(math.log10(max(abs(float(q[j])), 1e-300)) + math.log10(j + 1)
                 + (j * math.log10(math.pi ** 2 + 1)) for j in range(J + 1))
    E = D + 2 + max(0, math.ceil(growth)) + math.ceil(math.log10(J + 1))
    with mpmath.workdps(E + 10):
        P = int(mpmath.floor(mpmath.pi ** 2 * mpmath.mpf(10) ** E))
    scale_D = 10 ** D
    total = 0
    for j, qj in enumerate(q):
        num = qj.numerator * P ** j * scale_D
        den = qj.denominator * 10 ** (E * j)
        total += (2 * num + den) // (2 * den)  # round half up
    err = (Decimal(10) ** -(d + 2)  # tail
           + Decimal(J + 1) / 2 * Decimal(10) ** -D  # rounding
           + Decimal(10) ** -(D + 1))  # pi**2 error after growth allowance
    with localcontext() as ctx:
        ctx.prec = D + 20
        value = Decimal(total).scaleb(-D)
    return PrecisionDecimal(value, d, err)


# -- ancilla angle -------------------------------------------------------------


def alpha_from_pbar(pbar, d: int = 15) -> PrecisionDecimal:
    """``arcsin(sqrt(1/(4 pbar)))``; ``pbar`` may be a Fraction, Decimal, str
    or :class:`PrecisionDecimal` (whose error bound is propagated)."""
    err_in = Decimal(0)
    if isinstance(pbar, PrecisionDecimal):
        err_in = pbar.error_bound
        pbar = pbar.value
    with mpmath.workdps(d + 15):
        if isinstance(pbar, Fraction):
            pb = mpmath.mpf(pbar.numerator) / pbar.denominator
        else:
            pb = mpmath.mpf(str(pbar))
        if pb < mpmath.mpf(1) / 4 - mpmath.mpf(10) ** (-(d + 12)):
            raise ProbabilityError(f"pbar = {pbar} < 1/4: cannot damp to 1/4")
        if pb > 1:
            raise ProbabilityError(f"pbar = {pbar} > 1")
        arg = mpmath.sqrt(1 / (4 * pb))
        alpha = mpmath.pi / 2 if arg >= 1 else mpmath.asin(arg)
        if err_in and 4 * pb > 1:
            slope = 1 / (2 * pb * mpmath.sqrt(4 * pb - 1))
            err = mpmath.mpf(str(err_in)) * slope * 2
        else:
            err = mpmath.mpf(0)
        err += mpmath.mpf(10) ** (-(d + 10))
        value = _to_decimal(alpha, d + 10)
        err_dec = Decimal(mpmath.nstr(err, 5))
    return PrecisionDecimal(value, d, err_dec)


def alpha_for(p: int, N: int, d: int) -> PrecisionDecimal:
    """Ancilla angle for ``(p, N)`` correct to ``d`` digits."""
    pbar = avg_success_series(p, N, d + 10)
    return alpha_from_pbar(pbar, d)
