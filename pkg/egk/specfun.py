from dataclasses import dataclass, field
from egk.errors import AccuracyError, DivergenceError, DomainError
import logging
import math
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc, gammaln
from typing import Callable, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

# exp() arguments below this underflow to zero in double precision
_LOG_TINY = -745.0
# accepted slack on QUADPACK error estimates that come with a warning
_WARNING_SLACK = 1e3


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Error control for adaptive quadrature.
    @param abs_tol Absolute tolerance
    @param rel_tol Relative tolerance
    @param max_subdivisions Upper bound on adaptive bisections
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise DomainError(
                f"quadrature tolerances must be positive, got abs_tol={self.abs_tol}, rel_tol={self.rel_tol}"
            )
        if int(self.max_subdivisions) < 1:
            raise DomainError(
                f"max_subdivisions must be at least 1, got {self.max_subdivisions}"
            )

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True, eq=False)
class GcqRule:
    """Gauss-Chebyshev weights and nodes on the unit interval"""

    N: int
    weights: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)


def _finite(x: float, name: str):
    if x is None or math.isnan(x):
        raise DomainError(f"{name} must be a number, got {x}")


def ln_gamma(x: float) -> float:
    _finite(x, "x")
    if x <= 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return float(gammaln(x))


def upper_gamma(a: float, x: float) -> float:
    """
    Upper incomplete gamma function Γ(a, x), not regularized.
    """
    _finite(a, "a")
    _finite(x, "x")
    if a <= 0 or x < 0:
        raise DomainError(f"upper_gamma requires a > 0 and x >= 0, got a={a}, x={x}")
    return math.exp(log_ext_upper_gamma(a, x, 0.0, 1.0))


def lower_gamma(a: float, x: float) -> float:
    """
    Lower incomplete gamma function γ(a, x), not regularized.
    """
    _finite(a, "a")
    _finite(x, "x")
    if a <= 0 or x < 0:
        raise DomainError(f"lower_gamma requires a > 0 and x >= 0, got a={a}, x={x}")
    return math.exp(log_ext_lower_gamma(a, x, 0.0, 1.0))


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    points: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """
    Adaptive quadrature of f over (a, b), b may be +inf. Semi-infinite
    ranges are mapped to (0, 1) with t = a + u / (1 - u). Algebraic endpoint
    singularities are handled by QUADPACK's extrapolation.
    @param f The integrand
    @param a Lower limit
    @param b Upper limit, finite or math.inf
    @param spec Tolerances and subdivision limit
    @param points Optional interior break points (in the original variable)
    @return (value, err_est)
    """
    _finite(a, "a")
    _finite(b, "b")
    if math.isinf(a):
        raise DomainError("integrate requires a finite lower limit")
    if b < a:
        raise DomainError(f"integrate requires a <= b, got ({a}, {b})")
    if b == a:
        return 0.0, 0.0

    if math.isinf(b):

        def g(u: float) -> float:
            one_minus = 1.0 - u
            if one_minus <= 0.0:
                return 0.0
            v = f(a + u / one_minus) / (one_minus * one_minus)
            # t -> inf overflows in some integrands whose limit is zero
            return v if math.isfinite(v) else 0.0

        lo, hi = 0.0, 1.0
        if points:
            points = [(p - a) / (1.0 + p - a) for p in points if p > a]
    else:
        g, lo, hi = f, a, b
        if points:
            points = [p for p in points if a < p < b]

    result = quad(
        g,
        lo,
        hi,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=int(spec.max_subdivisions),
        points=points or None,
        full_output=1,
    )
    value, err = float(result[0]), float(result[1])
    if len(result) > 3:
        message = str(result[3]).strip().splitlines()[0]
        if not math.isfinite(value) or err > _WARNING_SLACK * spec.tolerance(value):
            raise AccuracyError(
                f"quadrature on ({a}, {b}) did not converge: {message}", value, err
            )
        logger.debug(f"Accepting quadrature with err={err:.3g} ({message})")
    return value, err


def gcq_rule(N: int) -> GcqRule:
    if int(N) != N or N < 1:
        raise DomainError(f"gcq_rule requires a positive integer N, got {N}")
    N = int(N)
    theta = (2.0 * np.arange(1, N + 1) - 1.0) * np.pi / (2.0 * N)
    weights = np.pi / (2.0 * N) * np.sin(theta)
    nodes = 0.5 + 0.5 * np.cos(theta)
    return GcqRule(N, weights, nodes)


def gcq_integrate(f: Callable[[float], float], a: float, b: float, rule: GcqRule):
    """Gauss-Chebyshev approximation of ∫_a^b f"""
    width = b - a
    return width * float(
        sum(w * f(a + width * t) for w, t in zip(rule.weights, rule.nodes))
    )


## Extended incomplete gamma functions
##
## Both functions integrate exp(phi(s)) with phi(s) = alpha*s - e^s - b*e^(-beta*s)
## in the log variable s = ln t. phi is concave, so the integrand is a single
## bump; it is evaluated relative to its maximum and returned as a logarithm.


def _phi(s: float, alpha: float, log_b: float, beta: float) -> float:
    if s > 700.0:
        return -math.inf
    value = alpha * s - math.exp(s)
    if log_b > -math.inf:
        e = log_b - beta * s
        if e > 700.0:
            return -math.inf
        value -= math.exp(e)
    return value


def _slope(s: float, alpha: float, log_b: float, beta: float) -> float:
    value = alpha - math.exp(min(s, 700.0))
    if log_b > -math.inf:
        value += beta * math.exp(min(log_b - beta * s, 700.0))
    return value


def _curvature(s: float, alpha: float, log_b: float, beta: float) -> float:
    value = math.exp(min(s, 700.0))
    if log_b > -math.inf:
        value += beta * beta * math.exp(min(log_b - beta * s, 700.0))
    return value


def _mode(alpha: float, log_b: float, beta: float) -> float:
    """
    Location of the maximum of phi. Returns -inf when phi is decreasing
    everywhere (b = 0 and alpha <= 0).
    """
    if log_b == -math.inf:
        return math.log(alpha) if alpha > 0 else -math.inf
    h = lambda s: max(min(_slope(s, alpha, log_b, beta), 1e300), -1e300)
    lo, hi = -1.0, 1.0
    while h(hi) > 0:
        lo, hi = hi, 2.0 * hi
    while h(lo) < 0:
        lo, hi = 2.0 * lo, lo
    return brentq(h, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def _scale(s: float, alpha: float, log_b: float, beta: float) -> float:
    width = 1.0 / math.sqrt(_curvature(s, alpha, log_b, beta))
    slope = abs(_slope(s, alpha, log_b, beta))
    if slope > 0:
        width = min(width, 1.0 / slope)
    return width


def _tail(
    alpha: float,
    log_b: float,
    beta: float,
    s0: float,
    phi0: float,
    direction: float,
    limit: float,
    spec: QuadratureSpec,
) -> float:
    """
    ∫ exp(phi(s) - phi0) ds from s0 in the given direction up to `limit`
    (±inf allowed) using s = s0 ± sigma * u / (1 - u).
    """
    sigma = _scale(s0, alpha, log_b, beta)
    if math.isinf(limit):
        u_max = 1.0
    else:
        d = abs(limit - s0)
        if d == 0.0:
            return 0.0
        u_max = d / (sigma + d)

    def g(u: float) -> float:
        one_minus = 1.0 - u
        if one_minus <= 0.0:
            return 0.0
        s = s0 + direction * sigma * u / one_minus
        lv = _phi(s, alpha, log_b, beta) - phi0
        if lv < _LOG_TINY:
            return 0.0
        return math.exp(lv) * sigma / (one_minus * one_minus)

    # the peak of exp(phi - phi0) is 1, so scale the absolute tolerance by sigma
    local = QuadratureSpec(spec.abs_tol * sigma, spec.rel_tol, spec.max_subdivisions)
    value, _ = integrate(g, 0.0, u_max, local)
    return value


def _log_ext_gamma(
    alpha: float, x: float, b: float, beta: float, upper: bool, spec: QuadratureSpec
) -> float:
    log_b = math.log(b) if b > 0 else -math.inf
    log_x = math.log(x) if x > 0 else -math.inf
    s_star = _mode(alpha, log_b, beta)

    pieces = []
    if upper:
        if s_star > log_x:
            s0 = s_star
            pieces = [(-1.0, log_x), (1.0, math.inf)]
        else:
            s0 = log_x
            pieces = [(1.0, math.inf)]
    else:
        if s_star < log_x:
            s0 = s_star
            pieces = [(-1.0, -math.inf), (1.0, log_x)]
        else:
            s0 = log_x
            pieces = [(-1.0, -math.inf)]

    phi0 = _phi(s0, alpha, log_b, beta)
    if phi0 == -math.inf:
        return -math.inf
    total = sum(
        _tail(alpha, log_b, beta, s0, phi0, direction, limit, spec)
        for direction, limit in pieces
    )
    if total <= 0.0:
        return -math.inf
    return phi0 + math.log(total)


def _check_ext_args(alpha: float, x: float, b: float, beta: float):
    for value, name in ((alpha, "alpha"), (x, "x"), (b, "b"), (beta, "beta")):
        _finite(value, name)
    if not beta > 0:
        raise DomainError(f"extended gamma requires beta > 0, got {beta}")
    if x < 0:
        raise DomainError(f"extended gamma requires x >= 0, got {x}")
    if b < 0:
        raise DomainError(f"extended gamma requires b >= 0, got {b}")
    if math.isinf(alpha) or math.isinf(b) or math.isinf(beta):
        raise DomainError("extended gamma arguments must be finite")


def log_ext_upper_gamma(
    alpha: float,
    x: float,
    b: float,
    beta: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """
    Natural logarithm of Γ(α, x, b, β) = ∫_x^∞ t^(α-1) exp(-t - b t^(-β)) dt.
    """
    _check_ext_args(alpha, x, b, beta)
    if math.isinf(x):
        return -math.inf
    if b == 0.0:
        if alpha <= 0 and x == 0.0:
            raise DivergenceError(
                f"Γ({alpha}, 0, 0, {beta}) diverges at the origin for alpha <= 0"
            )
        if alpha > 0:
            q = float(gammaincc(alpha, x))
            if q > 0.0:
                return float(gammaln(alpha)) + math.log(q)
    return _log_ext_gamma(alpha, x, b, beta, True, spec)


def log_ext_lower_gamma(
    alpha: float,
    x: float,
    b: float,
    beta: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """
    Natural logarithm of γ(α, x, b, β) = ∫_0^x t^(α-1) exp(-t - b t^(-β)) dt.
    """
    _check_ext_args(alpha, x, b, beta)
    if b == 0.0:
        if alpha <= 0:
            raise DivergenceError(
                f"γ({alpha}, {x}, 0, {beta}) diverges at the origin for alpha <= 0"
            )
        p = float(gammainc(alpha, x)) if math.isfinite(x) else 1.0
        if p > 0.0:
            return float(gammaln(alpha)) + math.log(p)
    if x == 0.0:
        return -math.inf
    if math.isinf(x):
        return log_ext_upper_gamma(alpha, 0.0, b, beta, spec)
    return _log_ext_gamma(alpha, x, b, beta, False, spec)


def _exp(log_value: float) -> float:
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def ext_upper_gamma(
    alpha: float,
    x: float,
    b: float,
    beta: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return _exp(log_ext_upper_gamma(alpha, x, b, beta, spec))


def ext_lower_gamma(
    alpha: float,
    x: float,
    b: float,
    beta: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return _exp(log_ext_lower_gamma(alpha, x, b, beta, spec))
