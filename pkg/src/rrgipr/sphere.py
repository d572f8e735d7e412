"""IPR moments over the unit sphere orthogonal to the constant vector.

Three routes to the same numbers:

* closed forms (``mu1_exact``, ``ipr2_sphere_average_exact``, ``mu2_exact``);
* ``expansion_moment_exact``: expand IPR(Q^T y)**p into monomials of
  y_1..y_{n-1} with exact coefficients in Q(sqrt n), and average each monomial
  with the Gamma-function formula for spheres;
* Monte-Carlo sampling of the subsphere (``mc_ipr_moments``).

Gamma values at half-integers are carried as ``rational * sqrt(pi)**k`` so
every average is an exact ``Fraction``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ResourceLimitError

# --------------------------------------------------------------------------
# exact Gamma values and monomial integrals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactSphereValue:
    """The number ``rational * sqrt(pi)**pi_half_power``."""

    rational: Fraction
    pi_half_power: int

    def __post_init__(self):
        if self.rational == 0 and self.pi_half_power != 0:
            object.__setattr__(self, "pi_half_power", 0)

    def __float__(self):
        return float(self.rational) * math.pi ** (self.pi_half_power / 2)

    def __truediv__(self, other: ExactSphereValue) -> ExactSphereValue:
        return ExactSphereValue(
            Fraction(self.rational) / other.rational, self.pi_half_power - other.pi_half_power
        )


@dataclass(frozen=True)
class ExponentVector:
    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(a < 0 for a in self.exponents):
            raise ValueError("exponents must be non-negative")

    @property
    def dims(self) -> int:
        return len(self.exponents)


def gamma_half_integer(twice: int) -> ExactSphereValue:
    """Gamma(twice / 2) for a positive integer ``twice``."""
    if twice <= 0:
        raise ValueError("argument must be positive")
    if twice % 2 == 0:
        return ExactSphereValue(Fraction(math.factorial(twice // 2 - 1)), 0)
    k = (twice - 1) // 2  # Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
    return ExactSphereValue(Fraction(math.factorial(2 * k), 4**k * math.factorial(k)), 1)


def folland_integral(a) -> ExactSphereValue:
    """Exact integral of ``prod x_j**a_j`` over the unit sphere in len(a) dimensions."""
    a = tuple(a.exponents if isinstance(a, ExponentVector) else a)
    if not a:
        raise ValueError("need at least one dimension")
    if any(e < 0 for e in a):
        raise ValueError("exponents must be non-negative")
    if any(e % 2 for e in a):
        return ExactSphereValue(Fraction(0), 0)
    num = Fraction(2)
    power = 0
    for e in a:
        g = gamma_half_integer(e + 1)
        num *= g.rational
        power += g.pi_half_power
    den = gamma_half_integer(sum(a) + len(a))
    return ExactSphereValue(num / den.rational, power - den.pi_half_power)


@lru_cache(maxsize=None)
def _sorted_average(exps: tuple[int, ...], dims: int) -> Fraction:
    full = exps + (0,) * (dims - len(exps))
    ratio = folland_integral(full) / folland_integral((0,) * dims)
    if ratio.pi_half_power != 0:
        raise ArithmeticError("sqrt(pi) powers failed to cancel")
    return ratio.rational


def sphere_average(a) -> Fraction:
    """Uniform average of a monomial over the unit sphere; always rational."""
    a = tuple(a.exponents if isinstance(a, ExponentVector) else a)
    if any(e % 2 for e in a):
        return Fraction(0)
    nonzero = tuple(sorted((e for e in a if e), reverse=True))
    return _sorted_average(nonzero, len(a))


def gamma_half_ratio(n: int, k: int) -> Fraction:
    """Gamma((n-1)/2) / Gamma((n-1)/2 + k) for k in {2, 4}."""
    if k not in (2, 4):
        raise ValueError(f"unsupported Gamma offset {k}; expected 2 or 4")
    if n < 2:
        raise ValueError("n must be at least 2")
    ratio = gamma_half_integer(n - 1) / gamma_half_integer(n - 1 + 2 * k)
    if ratio.pi_half_power != 0:
        raise ArithmeticError("sqrt(pi) powers failed to cancel")
    return ratio.rational


def gamma_half_ratio_closed_form(n: int, k: int) -> Fraction:
    if k == 2:
        return Fraction(4, (n + 1) * (n - 1))
    if k == 4:
        return Fraction(16, (n + 5) * (n + 3) * (n + 1) * (n - 1))
    raise ValueError(f"unsupported Gamma offset {k}; expected 2 or 4")


# --------------------------------------------------------------------------
# closed-form moments
# --------------------------------------------------------------------------


def mu1_exact(n: int) -> Fraction:
    """Sphere mean of the IPR: 3 - 6/(n+1)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return 3 - Fraction(6, n + 1)


def ipr2_sphere_average_exact(n: int) -> Fraction:
    if n < 2:
        raise ValueError("n must be at least 2")
    return 9 + Fraction(48, n + 1) - Fraction(270, n + 3) + Fraction(210, n + 5)


def mu2_exact(n: int) -> Fraction:
    """Sphere variance of the IPR."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return Fraction(24 * n * (n - 2) * (n - 3), (n + 5) * (n + 3) * (n + 1) ** 2)


# --------------------------------------------------------------------------
# the rotation Q taking the constant vector to e_n
# --------------------------------------------------------------------------


def _check_index(i, j, n):
    if n < 2:
        raise ValueError("n must be at least 2")
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"indices ({i}, {j}) outside 1..{n}")


def q_component(i: int, j: int, n: int) -> float:
    """Entry Q_ij (1-based) of the rotation with Q p = e_n, p = (1,...,1)/sqrt(n)."""
    _check_index(i, j, n)
    r = math.sqrt(n)
    din, dnj = float(i == n), float(j == n)
    c = (1.0 - r) / (n - 1)
    return float(i == j) + (c * (1.0 - din - dnj + n * dnj * din) + din - dnj) / r


def q_matrix(n: int) -> np.ndarray:
    """Q assembled entrywise from ``q_component``'s formula (vectorised)."""
    r = math.sqrt(n)
    last = np.zeros(n)
    last[-1] = 1.0
    din, dnj = last[:, None], last[None, :]
    c = (1.0 - r) / (n - 1)
    return np.eye(n) + (c * (1.0 - din - dnj + n * dnj * din) + din - dnj) / r


def q_matrix_rotation(n: int) -> np.ndarray:
    """Q built as a plane rotation by theta, cos(theta) = 1/sqrt(n), from outer products."""
    v1 = np.full(n, 1.0 / math.sqrt(n))
    v2 = -np.ones(n)
    v2[-1] = n - 1.0
    v2 /= math.sqrt(n * (n - 1))
    cos = 1.0 / math.sqrt(n)
    sin = math.sqrt(1.0 - 1.0 / n)
    return (
        np.eye(n)
        + sin * (np.outer(v2, v1) - np.outer(v1, v2))
        + (cos - 1.0) * (np.outer(v1, v1) + np.outer(v2, v2))
    )


@dataclass(frozen=True)
class QPowerCoeffs:
    """(Q_ij)**s = [(-1)**s + alpha delta_nj + beta delta_ij] / (n + sqrt n)**s for i < n."""

    s: int
    n: int
    alpha_s: float
    beta_s: float

    def power(self, i: int, j: int) -> float:
        sign = -1.0 if self.s % 2 else 1.0
        val = sign + self.alpha_s * (j == self.n) + self.beta_s * (i == j)
        return val / (self.n + math.sqrt(self.n)) ** self.s


def q_power_coeffs(s: int, n: int) -> QPowerCoeffs:
    r = math.sqrt(n)
    n15, n2, n25, n3, n35, n4 = n * r, n * n, n * n * r, n**3, n**3 * r, n**4
    if s == 1:
        alpha, beta = -r, n + r
    elif s == 2:
        alpha, beta = n + 2 * r, (n - 1) * (n + 2 * r)
    elif s == 3:
        alpha = -r * (3 + 3 * r + n)
        beta = (n + r) * (3 - 3 * r - 2 * n + 2 * n15 + n2)
    elif s == 4:
        alpha = (n + 2 * r) * (2 + 2 * r + n)
        beta = (n - 1) * (n + 2 * r) * (n2 + 2 * n15 - n - 2 * r + 2)
    elif s == 6:
        alpha = (n + 2 * r) * (1 + r + n) * (3 + 3 * r + n)
        beta = (
            (n + 2 * r) * (n - 1) * (1 - r + 2 * n15 + n2) * (3 - 3 * r - 2 * n + 2 * n15 + n2)
        )
    elif s == 8:
        alpha = (n + 2 * r) * (2 + 2 * r + n) * (2 + 4 * r + 6 * n + 4 * n15 + n2)
        beta = (
            (n + 2 * r)
            * (n - 1)
            * (2 - 2 * r - n + 2 * n15 + n2)
            * (2 - 4 * r + 2 * n + 8 * n15 - 5 * n2 - 8 * n25 + 2 * n3 + 4 * n35 + n4)
        )
    else:
        raise ValueError(f"no coefficients tabulated for power {s}; use 1, 2, 3, 4, 6 or 8")
    return QPowerCoeffs(s, n, alpha, beta)


Q_SUM_NAMES = ("quartic", "two_two", "eighth", "sixth_second", "mixed")


def q_closed_form_sums(n: int) -> dict[str, float]:
    """Closed forms of five sums over powers of Q entries (first index < n).

    quartic       sum_i sum_k Q_ki^4
    two_two       sum_i sum'_{k,l} Q_ki^2 Q_li^2
    eighth        sum_k sum_i Q_ki^8
    sixth_second  sum'_{k,l} sum_i Q_ki^6 Q_li^2
    mixed         sum'_{k,l,m} sum'_{i,j} Q_ki^3 Q_li Q_kj Q_lj Q_mj^2

    Primed sums run over pairwise distinct indices; k, l, m < n.
    """
    r = math.sqrt(n)

    def half_pow(e):
        return n ** (e / 2)

    lead = (1 + r) ** 6 * n**3
    quartic = n - (29 + 30 * r + 5 * n) / (1 + r) ** 2 + 24 / r - 9 / n
    two_two = (r - 1) * (3 * r + 5) * (n - 2) / (n * (r + 1) ** 2)
    eighth = (r - 1) / lead * (
        49 + 7 * r - 7 * n + 119 * half_pow(3) + 21 * n**2 - 133 * half_pow(5) + 9 * n**3
        + 111 * half_pow(7) + n**4 - 57 * half_pow(9) - 13 * n**5 + 13 * half_pow(11) + 7 * n**6 + half_pow(13)
    )
    sixth_second = (r - 1) * (n - 2) / lead * (
        37 + 31 * r + 10 * n + 40 * half_pow(3) + 29 * n**2 - 15 * half_pow(5)
        - 14 * n**3 + 4 * half_pow(7) + 5 * n**4 + half_pow(9)
    )
    mixed = (1 - r) * (n - 2) * (n - 3) / lead * (
        29 + 39 * r + 4 * n - 28 * half_pow(3) - 12 * n**2 + 12 * half_pow(5) + 10 * n**3 + 2 * half_pow(7)
    )
    return dict(zip(Q_SUM_NAMES, (quartic, two_two, eighth, sixth_second, mixed)))


def q_direct_sums(n: int) -> dict[str, float]:
    """The same five sums evaluated directly from the entries of Q."""
    q = q_matrix(n)[: n - 1]  # rows k < n
    q2, q4 = q**2, q**4
    quartic = q4.sum()
    col2 = q2.sum(axis=0)
    two_two = float((col2**2 - (q4).sum(axis=0)).sum())
    eighth = (q**8).sum()
    sixth_second = float(((q**6).sum(axis=0) * col2 - (q**8).sum(axis=0)).sum())
    # mixed: for each ordered i != j, a_k b_l c_m summed over distinct k, l, m
    # by inclusion-exclusion; arrays indexed [i, j, k]
    a = (q**3).T[:, None, :] * q.T[None, :, :]
    b = q.T[:, None, :] * q.T[None, :, :]
    c = np.broadcast_to(q2.T[None, :, :], a.shape)
    sa, sb, sc = a.sum(-1), b.sum(-1), c.sum(-1)
    distinct = (
        sa * sb * sc
        - (a * b).sum(-1) * sc
        - (a * c).sum(-1) * sb
        - (b * c).sum(-1) * sa
        + 2.0 * (a * b * c).sum(-1)
    )
    np.fill_diagonal(distinct, 0.0)
    mixed = float(distinct.sum())
    return dict(zip(Q_SUM_NAMES, (float(quartic), two_two, float(eighth), sixth_second, mixed)))


# --------------------------------------------------------------------------
# exact expansion oracle over Q(sqrt n)
# --------------------------------------------------------------------------


class QuadraticSurd:
    """Exact ``a + b*sqrt(d)`` with rational a, b; perfect-square d folds into a."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d):
        a, b = Fraction(a), Fraction(b)
        root = math.isqrt(d)
        if root * root == d:
            a, b = a + b * root, Fraction(0)
        self.a, self.b, self.d = a, b, d

    def __add__(self, other):
        if isinstance(other, QuadraticSurd):
            return QuadraticSurd(self.a + other.a, self.b + other.b, self.d)
        return QuadraticSurd(self.a + other, self.b, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.a, -self.b, self.d)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QuadraticSurd):
            return QuadraticSurd(
                self.a * other.a + self.b * other.b * self.d,
                self.a * other.b + self.b * other.a,
                self.d,
            )
        return QuadraticSurd(self.a * other, self.b * other, self.d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, QuadraticSurd):
            return QuadraticSurd(self.a / other, self.b / other, self.d)
        norm = other.a * other.a - other.b * other.b * self.d
        conj = QuadraticSurd(other.a / norm, -other.b / norm, self.d)
        return self * conj

    def __rtruediv__(self, other):
        return QuadraticSurd(other, 0, self.d) / self

    def __eq__(self, other):
        if isinstance(other, QuadraticSurd):
            return (self.a, self.b) == (other.a, other.b)
        return self.b == 0 and self.a == other

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __repr__(self):
        return f"QuadraticSurd({self.a}, {self.b}, {self.d})"


def q_component_exact(i: int, j: int, n: int) -> QuadraticSurd:
    """``q_component`` evaluated exactly in Q(sqrt n)."""
    _check_index(i, j, n)
    r = QuadraticSurd(0, 1, n)
    din, dnj = int(i == n), int(j == n)
    c = (1 - r) / (n - 1)
    return int(i == j) + (c * (1 - din - dnj + n * dnj * din) + din - dnj) / r


def _poly_mul(p, q, d):
    out = defaultdict(lambda: [Fraction(0), Fraction(0)])
    for ea, (a1, b1) in p.items():
        for eb, (a2, b2) in q.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            acc = out[key]
            acc[0] += a1 * a2 + b1 * b2 * d
            acc[1] += a1 * b2 + b1 * a2
    return dict(out)


def expansion_moment_exact(n: int, power: int, max_n: int = 8) -> Fraction:
    """Exact sphere average of IPR**power by full monomial expansion.

    x = Q^T y with y_n = 0 maps the unit sphere of R^{n-1} onto the subsphere
    orthogonal to the constant vector, so IPR(x)**power becomes a polynomial
    in y_1..y_{n-1} whose monomials are averaged exactly.  Coefficients are
    kept as (rational, rational) pairs meaning ``a + b*sqrt(n)``; the
    irrational parts must cancel.
    """
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    if n < 2:
        raise ValueError("n must be at least 2")
    if n > max_n:
        raise ResourceLimitError(f"expansion oracle budget is n <= {max_n}; got n={n}")
    m = n - 1
    unit = tuple([0] * m)
    quartic_sum: dict = {}
    for i in range(1, n + 1):
        lin = {}
        for k in range(1, n):
            qk = q_component_exact(k, i, n)
            if qk == 0:
                continue
            e = list(unit)
            e[k - 1] = 1
            lin[tuple(e)] = (qk.a, qk.b)
        sq = _poly_mul(lin, lin, n)
        fourth = _poly_mul(sq, sq, n)
        for key, (a, b) in fourth.items():
            acc = quartic_sum.setdefault(key, [Fraction(0), Fraction(0)])
            acc[0] += n * a
            acc[1] += n * b
    poly = {k: tuple(v) for k, v in quartic_sum.items()}
    if power == 2:
        poly = _poly_mul(poly, poly, n)
    total_a = Fraction(0)
    total_b = Fraction(0)
    for exps, (a, b) in poly.items():
        if any(e % 2 for e in exps):
            continue
        avg = sphere_average(exps)
        total_a += a * avg
        total_b += b * avg
    if total_b != 0:
        raise ArithmeticError(f"irrational remainder {total_b} * sqrt({n}) in sphere moment")
    return total_a


# --------------------------------------------------------------------------
# Monte-Carlo sampling of the subsphere
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspherePoint:
    coords: np.ndarray


def _project(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = raw - raw.mean(axis=-1, keepdims=True)
    norms = np.linalg.norm(x, axis=-1)
    return x, norms


def sample_subsphere(n: int, rng: np.random.Generator) -> SubspherePoint:
    """Uniform point on the unit sphere orthogonal to (1, ..., 1)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    while True:
        x, norm = _project(rng.standard_normal(n))
        if norm > 1e-12:
            return SubspherePoint(x / norm)


@dataclass(frozen=True)
class MCMoments:
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    samples: int


def _sample_iprs(n, count, rng, chunk):
    out = np.empty(count)
    done = 0
    while done < count:
        size = min(chunk, count - done)
        x, norms = _project(rng.standard_normal((size, n)))
        bad = norms <= 1e-12
        while bad.any():
            x[bad], norms[bad] = _project(rng.standard_normal((int(bad.sum()), n)))
            bad = norms <= 1e-12
        x /= norms[:, None]
        out[done : done + size] = n * np.sum(x**4, axis=1)
        done += size
    return out


def mc_ipr_moments(n: int, samples: int, rng: np.random.Generator, blocks: int = 100,
                   chunk: int = 20000) -> MCMoments:
    """Sample mean and variance of the IPR with block-jackknife standard errors."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    values = _sample_iprs(n, samples, rng, chunk)
    mean = float(values.mean())
    var = float(values.var())
    blocks = min(blocks, samples)
    groups = np.array_split(values, blocks)
    sizes = np.array([len(g) for g in groups], dtype=float)
    sums = np.array([g.sum() for g in groups])
    sq_sums = np.array([(g * g).sum() for g in groups])
    rest = samples - sizes
    jk_mean = (sums.sum() - sums) / rest
    jk_var = (sq_sums.sum() - sq_sums) / rest - jk_mean**2
    factor = (blocks - 1) / blocks
    mean_se = math.sqrt(factor * float(np.sum((jk_mean - jk_mean.mean()) ** 2)))
    var_se = math.sqrt(factor * float(np.sum((jk_var - jk_var.mean()) ** 2)))
    return MCMoments(mean, var, mean_se, var_se, samples)
