from dataclasses import dataclass
from egk.errors import ConvergenceError, DomainError, SpecError
from egk.params import ChannelParams
import logging
import math
import numpy as np
from scipy.integrate import trapezoid
from scipy.special import loggamma
from typing import List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Pair = Tuple[float, float]

# default contour geometry
_HALF_HEIGHT = 40.0
_MAX_STEP = 0.05
# a half-infinite band puts the contour this far from its finite edge
_EDGE_OFFSET = 0.5
_MAX_DOUBLINGS = 6
# relative size of the imaginary residue that is still considered round-off
_IMAG_RTOL = 1e-9


def _pairs(values: Sequence[Sequence[float]], name: str) -> Tuple[Pair, ...]:
    result = []
    for pair in values:
        if len(pair) != 2:
            raise SpecError(f"{name} entries must be (coefficient, scale) pairs")
        coefficient, scale = float(pair[0]), float(pair[1])
        if not math.isfinite(coefficient) or not math.isfinite(scale):
            raise SpecError(f"{name} entries must be finite, got {pair}")
        if not scale > 0:
            raise SpecError(f"{name} scales must be positive, got {pair}")
        result.append((coefficient, scale))
    return tuple(result)


@dataclass(frozen=True)
class FoxHSpec:
    """
    H^{m,n}_{p,q}[z | (a_i, A_i); (b_j, B_j)] with the Mellin-Barnes kernel
        Θ(s) = Π_{j<=m} Γ(b_j + B_j s) Π_{i<=n} Γ(1 - a_i - A_i s)
               / (Π_{j>m} Γ(1 - b_j - B_j s) Π_{i>n} Γ(a_i + A_i s)).
    The constructor rejects specs whose two pole families cannot be
    separated by a vertical line.
    """

    m: int
    n: int
    p: int
    q: int
    a: Tuple[Pair, ...] = ()
    b: Tuple[Pair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "a", _pairs(self.a, "a"))
        object.__setattr__(self, "b", _pairs(self.b, "b"))
        for order in (self.m, self.n, self.p, self.q):
            if int(order) != order or order < 0:
                raise SpecError(f"orders must be nonnegative integers, got {order}")
        if self.n > self.p or self.m > self.q:
            raise SpecError(
                f"orders must satisfy n <= p and m <= q, got ({self.m},{self.n},{self.p},{self.q})"
            )
        if len(self.a) != self.p or len(self.b) != self.q:
            raise SpecError(
                f"expected {self.p} upper and {self.q} lower pairs, got {len(self.a)} and {len(self.b)}"
            )
        lo, hi = self.band()
        if not lo < hi:
            raise SpecError(
                f"poles cannot be separated: need {lo} < Re(s) < {hi} for H^{{{self.m},{self.n}}}_{{{self.p},{self.q}}}"
            )

    def band(self) -> Tuple[float, float]:
        """The open strip lo < Re(s) < hi that separates the pole families"""
        lo = max((-b / B for b, B in self.b[: self.m]), default=-math.inf)
        hi = min(((1.0 - a) / A for a, A in self.a[: self.n]), default=math.inf)
        return lo, hi

    @property
    def a_star(self) -> float:
        """Decay rate of the kernel along vertical lines; must be positive"""
        return (
            sum(B for _, B in self.b[: self.m])
            + sum(A for _, A in self.a[: self.n])
            - sum(B for _, B in self.b[self.m :])
            - sum(A for _, A in self.a[self.n :])
        )

    def kernel_log(self, s: np.ndarray) -> np.ndarray:
        """Complex logarithm of Θ(s), evaluated elementwise"""
        s = np.asarray(s, dtype=complex)
        value = np.zeros_like(s)
        for b, B in self.b[: self.m]:
            value += loggamma(b + B * s)
        for a, A in self.a[: self.n]:
            value += loggamma(1.0 - a - A * s)
        for b, B in self.b[self.m :]:
            value -= loggamma(1.0 - b - B * s)
        for a, A in self.a[self.n :]:
            value -= loggamma(a + A * s)
        return value


@dataclass(frozen=True)
class ContourSpec:
    c: float
    half_height: float = _HALF_HEIGHT
    step_count: int = int(2 * _HALF_HEIGHT / _MAX_STEP)

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise SpecError(f"contour abscissa must be finite, got {self.c}")
        if not self.half_height > 0:
            raise SpecError(f"half_height must be positive, got {self.half_height}")
        if int(self.step_count) != self.step_count or self.step_count < 2:
            raise SpecError(f"step_count must be an integer >= 2, got {self.step_count}")

    def check(self, spec: FoxHSpec):
        lo, hi = spec.band()
        if not lo < self.c < hi:
            raise SpecError(f"contour Re(s)={self.c} outside the feasible band ({lo}, {hi})")

    def doubled(self) -> "ContourSpec":
        return ContourSpec(self.c, 2.0 * self.half_height, 2 * self.step_count)


def auto_contour(spec: FoxHSpec) -> ContourSpec:
    """
    Contour at the middle of the feasible band (or at a fixed offset from
    its finite edge). The step keeps at least five steps per distance to the
    nearest pole so the trapezoidal rule stays spectrally accurate.
    """
    lo, hi = spec.band()
    if math.isfinite(lo) and math.isfinite(hi):
        c = 0.5 * (lo + hi)
    elif math.isfinite(lo):
        c = lo + _EDGE_OFFSET
    elif math.isfinite(hi):
        c = hi - _EDGE_OFFSET
    else:
        c = 0.0
    distance = min(c - lo, hi - c)
    step = min(_MAX_STEP, distance / 5.0)
    return ContourSpec(c, _HALF_HEIGHT, int(math.ceil(2 * _HALF_HEIGHT / step)))


def _trapezoid(spec: FoxHSpec, log_z: float, contour: ContourSpec):
    t = np.linspace(-contour.half_height, contour.half_height, contour.step_count + 1)
    s = contour.c + 1j * t
    log_values = spec.kernel_log(s) - s * log_z
    shift = float(np.max(log_values.real))
    values = np.exp(log_values - shift)
    integral = trapezoid(values, t)
    mass = trapezoid(np.abs(values), t)
    scale = math.exp(shift) / (2.0 * math.pi)
    return integral * scale, mass * scale


def foxh_eval_with_error(
    spec: FoxHSpec,
    z: float,
    contour: Optional[ContourSpec] = None,
    rel_tol: float = 1e-10,
) -> Tuple[float, float]:
    """
    Evaluates H(z) = (1/2πi) ∫ Θ(s) z^(-s) ds on a truncated vertical line.
    With an automatic contour the half height doubles until the value
    settles within rel_tol.
    @return (value, err_est)
    """
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"foxh_eval requires a finite z > 0, got {z}")
    if spec.a_star <= 0:
        raise ConvergenceError(
            f"kernel does not decay along vertical lines (a*={spec.a_star})"
        )
    auto = contour is None
    if auto:
        contour = auto_contour(spec)
    contour.check(spec)
    log_z = math.log(z)

    value, mass = _trapezoid(spec, log_z, contour)
    err = 0.0
    if auto:
        for _ in range(_MAX_DOUBLINGS):
            contour = contour.doubled()
            refined, mass = _trapezoid(spec, log_z, contour)
            err = abs(refined - value)
            value = refined
            if err <= max(rel_tol * abs(value), 1e-14 * mass):
                break
        else:
            raise ConvergenceError(
                f"Mellin-Barnes tail did not settle at half height {contour.half_height} (change {err:.3g})"
            )

    if abs(value.imag) > _IMAG_RTOL * max(abs(value.real), 1e-6 * mass):
        raise ConvergenceError(
            f"Mellin-Barnes integral has imaginary residue {value.imag:.3g} for real part {value.real:.3g}"
        )
    return float(value.real), float(err + 1e-16 * mass)


def foxh_eval(
    spec: FoxHSpec,
    z: float,
    contour: Optional[ContourSpec] = None,
    rel_tol: float = 1e-10,
) -> float:
    return foxh_eval_with_error(spec, z, contour, rel_tol)[0]


## Specs of the envelope and SNR statistics. Without shadowing the
## (m_s, 1/ξ_s) pair is dropped and every order shrinks by one.


def _fading_pairs(params: ChannelParams) -> List[Pair]:
    pairs = []
    if params.shadowing is not None:
        pairs.append((params.m_s, 1.0 / params.xi_s))
    pairs.append((params.m, 1.0 / params.xi))
    return pairs


def foxh_pdf_spec(params: ChannelParams) -> FoxHSpec:
    pairs = _fading_pairs(params)
    k = len(pairs)
    return FoxHSpec(k, 0, 0, k, (), pairs)


def foxh_cdf_spec(params: ChannelParams) -> FoxHSpec:
    """
    H^{2,1}_{1,3}[z | (1,1); (m_s,1/ξ_s), (m,1/ξ), (0,1)]. The (0,1) pair
    stays out of the m-group: its Γ(s) would share the pole at s=0 with the
    Γ(-s) contributed by (1,1).
    """
    pairs = _fading_pairs(params)
    k = len(pairs)
    return FoxHSpec(k, 1, 1, k + 1, [(1.0, 1.0)], pairs + [(0.0, 1.0)])


def foxh_ccdf_spec(params: ChannelParams) -> FoxHSpec:
    """H^{3,0}_{1,3}[z | (1,1); (m_s,1/ξ_s), (m,1/ξ), (0,1)]"""
    pairs = _fading_pairs(params)
    k = len(pairs)
    return FoxHSpec(k + 1, 0, 1, k + 1, [(1.0, 1.0)], pairs + [(0.0, 1.0)])


def foxh_mgf_spec(params: ChannelParams) -> FoxHSpec:
    pairs = _fading_pairs(params)
    k = len(pairs)
    return FoxHSpec(k, 1, 1, k, [(1.0, 1.0)], pairs)


def foxh_abep_spec(params: ChannelParams, b: float) -> FoxHSpec:
    """
    @param b Detection parameter of the conditional error probability
        Γ(b, aγ) / (2Γ(b))
    """
    if not b > 0:
        raise DomainError(f"detection parameter b must be positive, got {b}")
    pairs = _fading_pairs(params)
    k = len(pairs)
    return FoxHSpec(
        k, 2, 2, k + 1, [(1.0 - b, 1.0), (1.0, 1.0)], pairs + [(0.0, 1.0)]
    )


def foxh_capacity_spec(params: ChannelParams) -> FoxHSpec:
    pairs = _fading_pairs(params)
    k = len(pairs)
    return FoxHSpec(
        k + 2,
        1,
        2,
        k + 2,
        [(0.0, 1.0), (1.0, 1.0)],
        pairs + [(0.0, 1.0), (0.0, 1.0)],
    )
