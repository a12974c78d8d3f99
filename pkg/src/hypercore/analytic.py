"""Scalar quantities of the k-core problem on random r-uniform hypergraphs.

Everything here is a pure function of ``(d, r, k)`` and possibly ``p``:

* ``phi(params, p) = P[Po(c p^(r-1)) >= k-1]`` with ``c = d/(r-1)!``,
* its largest fixed point ``p*`` (iteration from ``p = 1``),
* the threshold ``d_{r,k}`` as the minimum of ``lam (r-1)! / P[Po(lam) >= k-1]^(r-1)``,
* the larger root ``lambda_{r,k}(d)`` of that function and the limiting
  core fraction ``psi_{r,k}(d) = P[Po(lambda_{r,k}(d)) >= k]``,
* the conditional coefficients ``q``, ``q_bar``, ``q_tilde`` that split the
  types of the 9-type branching process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ModelParams",
    "FixedPointResult",
    "ThresholdResult",
    "Coefficients",
    "ConvergenceError",
    "BracketError",
    "poisson_tail",
    "poisson_pmf",
    "phi",
    "threshold_function",
    "largest_fixed_point",
    "fixed_point_bisection",
    "threshold",
    "lambda_rk",
    "core_fraction_law",
    "is_subcritical",
    "coefficients",
    "message_sequence",
]

POSITIVITY_FLOOR = 1e-9
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not settle; ``last`` holds the final iterate."""

    def __init__(self, message: str, last: float):
        super().__init__(message)
        self.last = last


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Average degree ``d``, edge arity ``r`` and core order ``k``."""

    d: float
    r: int
    k: int

    def __post_init__(self):
        if not (isinstance(self.r, int) and self.r >= 3):
            raise ValueError(f"r must be an integer >= 3, got {self.r!r}")
        if not (isinstance(self.k, int) and self.k >= 2):
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"d must be a positive finite number, got {self.d!r}")

    @property
    def c(self) -> float:
        """Poisson rate of factor children of a variable node."""
        return self.d / math.factorial(self.r - 1)

    def with_k(self, k: int) -> "ModelParams":
        return ModelParams(self.d, self.r, k)

    def with_d(self, d: float) -> "ModelParams":
        return ModelParams(d, self.r, self.k)


@dataclass(frozen=True)
class FixedPointResult:
    p_star: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class ThresholdResult:
    d_rk: float
    lambda_min: float


@dataclass(frozen=True)
class Coefficients:
    c: float
    p: float
    q: float
    q_bar: float
    q_tilde: float


def poisson_pmf(mu: float, j: int) -> float:
    if mu < 0:
        raise ValueError(f"Poisson mean must be nonnegative, got {mu}")
    if j < 0:
        return 0.0
    if mu == 0:
        return 1.0 if j == 0 else 0.0
    return math.exp(j * math.log(mu) - mu - math.lgamma(j + 1))


def poisson_tail(mu: float, j: int) -> float:
    """Return ``P[Po(mu) >= j]``.

    Below the mode the upper tail is the large side, so the short head
    ``sum_{i<j}`` is subtracted from one. Otherwise the upper tail is summed
    directly, which keeps tiny tails accurate.
    """
    if not math.isfinite(mu) or mu < 0:
        raise ValueError(f"Poisson mean must be finite and nonnegative, got {mu}")
    if j <= 0:
        return 1.0
    if mu == 0:
        return 0.0
    if j > mu:
        term = poisson_pmf(mu, j)
        total = 0.0
        i = j
        while term > 0:
            total += term
            i += 1
            term *= mu / i
            if term < total * 1e-17:
                break
        return min(total, 1.0)
    term = math.exp(-mu)
    head = term
    for i in range(1, j):
        term *= mu / i
        head += term
    return max(0.0, 1.0 - head)


def phi(params: ModelParams, p: float) -> float:
    """``P[Po(c p^(r-1)) >= k-1]``, nondecreasing in ``p`` on ``[0, 1]``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return poisson_tail(params.c * p ** (params.r - 1), params.k - 1)


def threshold_function(r: int, k: int, lam: float) -> float:
    """``lam (r-1)! / P[Po(lam) >= k-1]^(r-1)``; infinite at ``lam = 0``."""
    tail = poisson_tail(lam, k - 1)
    if tail == 0.0:
        return math.inf
    return lam * math.factorial(r - 1) / tail ** (r - 1)


def largest_fixed_point(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    floor: float = POSITIVITY_FLOOR,
) -> FixedPointResult:
    """Largest fixed point of ``phi`` by monotone iteration from ``p = 1``.

    The iterates ``1, phi(1), phi(phi(1)), ...`` decrease to ``p*``. The run
    stops when a step moves less than ``tol`` (so the residual is below
    ``tol``), or declares ``p* = 0`` once an iterate drops below ``floor``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = 1.0
    for it in range(1, max_iter + 1):
        nxt = phi(params, p)
        if nxt < floor:
            return FixedPointResult(0.0, it, nxt)
        if abs(nxt - p) < tol:
            return FixedPointResult(nxt, it, abs(phi(params, nxt) - nxt))
        p = nxt
    raise ConvergenceError(
        f"fixed-point iteration for {params} did not converge in {max_iter} steps", p
    )


def fixed_point_bisection(params: ModelParams, tol: float = 1e-13, grid: int = 4096) -> float:
    """Largest root of ``phi(p) - p`` by a downward scan from 1 and bisection.

    Returns 0.0 when no sign change is found on the scan grid. Independent of
    the iteration in :func:`largest_fixed_point`; used to cross-check it.
    """
    g = lambda x: phi(params, x) - x  # noqa: E731
    hi = 1.0
    lo = None
    for i in range(grid - 1, 0, -1):
        x = i / grid
        if g(x) >= 0.0:
            lo = x
            break
        hi = x
    if lo is None:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold(r: int, k: int, tol: float = 1e-10) -> ThresholdResult:
    """Minimum ``d_{r,k}`` of the threshold function and its argmin.

    The function is unimodal on ``(0, inf)``; the right end of the bracket is
    doubled until the function increases, then golden-section search runs on
    ``[1e-6, right]``.
    """
    if r < 3 or k < 2:
        raise ValueError(f"need r >= 3 and k >= 2, got r={r}, k={k}")
    h = lambda lam: threshold_function(r, k, lam)  # noqa: E731
    lo, hi = 1e-6, 1.0
    for _ in range(60):
        if h(hi) > h(hi / 2):
            break
        hi *= 2.0
    else:
        raise BracketError(f"could not bracket the threshold minimum for r={r}, k={k}")
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = h(x1), h(x2)
    while b - a > tol * max(1.0, abs(a)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = h(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = h(x2)
    lam = 0.5 * (a + b)
    d_rk = h(lam)
    if not (h(lam * 1.01) > d_rk and h(lam * 0.99) > d_rk):
        raise BracketError(f"threshold minimum for r={r}, k={k} failed the local-minimum check")
    return ThresholdResult(d_rk=d_rk, lambda_min=lam)


def is_subcritical(params: ModelParams) -> bool:
    return params.d <= threshold(params.r, params.k).d_rk


def lambda_rk(params: ModelParams, tol: float = 1e-14) -> float:
    """Larger solution ``lam`` of ``d = lam (r-1)! / P[Po(lam) >= k-1]^(r-1)``."""
    thr = threshold(params.r, params.k)
    if params.d <= thr.d_rk:
        raise ValueError(
            f"d={params.d} is not above the threshold d_{params.r},{params.k}={thr.d_rk:.10g}"
        )
    h = lambda lam: threshold_function(params.r, params.k, lam)  # noqa: E731
    lo, hi = thr.lambda_min, 2.0 * thr.lambda_min
    while h(hi) < params.d:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if h(mid) < params.d:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def core_fraction_law(params: ModelParams) -> float:
    """``psi_{r,k}(d) = P[Po(lambda_{r,k}(d)) >= k]``; 0.0 when ``d <= d_{r,k}``."""
    if is_subcritical(params):
        return 0.0
    return poisson_tail(lambda_rk(params), params.k)


def coefficients(params: ModelParams, p: float) -> Coefficients:
    """Type-splitting probabilities of the 9-type process at parameter ``p``.

    ``q = P[Po(mu) = k-1 | Po(mu) >= k-1]`` and
    ``q_bar = P[Po(mu) = k-2 | Po(mu) <= k-2]`` with ``mu = c p^(r-1)``;
    ``q_tilde = P[Bin(r-1, p) = r-2 | Bin(r-1, p) <= r-2]``.
    Degenerate conditionals: ``q = 0`` when ``mu = 0`` and ``q_tilde = 1`` at
    ``p = 1`` (the continuous limit).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    r, k = params.r, params.k
    mu = params.c * p ** (r - 1)

    tail = poisson_tail(mu, k - 1)
    q = poisson_pmf(mu, k - 1) / tail if tail > 0.0 else 0.0

    # e^{-mu} cancels; terms mu^h/h! for h <= k-2 stay finite for any mu.
    terms = [1.0]
    for h in range(1, k - 1):
        terms.append(terms[-1] * mu / h)
    q_bar = terms[-1] / sum(terms)

    # divide numerator and denominator by (1-p) so p = 1 needs no special case
    num = (r - 1) * p ** (r - 2)
    den = sum(math.comb(r - 1, j) * p**j * (1.0 - p) ** (r - 2 - j) for j in range(r - 1))
    q_tilde = num / den if den > 0.0 else 1.0
    return Coefficients(c=params.c, p=p, q=q, q_bar=q_bar, q_tilde=min(q_tilde, 1.0))


def message_sequence(params: ModelParams, t_max: int) -> list[float]:
    """Expected root up-message ``E[mu_{v0 up}(t)]`` on the Poisson tree, ``t = 0..t_max``.

    ``p(0) = 1``, ``p(1) = phi(1)`` and ``p(t+2) = phi(p(t))``.
    """
    seq = [1.0]
    for t in range(1, t_max + 1):
        seq.append(phi(params, 1.0) if t == 1 else phi(params, seq[t - 2]))
    return seq
