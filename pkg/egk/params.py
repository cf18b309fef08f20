from dataclasses import dataclass, replace
from egk.errors import DomainError
import math
from scipy.special import gammaln
from typing import Optional

# relative slack when checking Ω_S·Ω_X against Ω
_SPLIT_RTOL = 1e-12


def _positive(value, name: str, lower: float = 0.0, inclusive: bool = False):
    if value is None or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    ok = value >= lower if inclusive else value > lower
    if not math.isfinite(value) or not ok:
        bound = f">= {lower}" if inclusive else f"> {lower}"
        raise DomainError(f"{name} must be finite and {bound}, got {value}")


@dataclass(frozen=True)
class Shadowing:
    """Generalized Nakagami-m shadowing component (fading figure m_s, shaping xi_s)"""

    m_s: float
    xi_s: float

    def __post_init__(self):
        _positive(self.m_s, "m_s", 0.5, inclusive=True)
        _positive(self.xi_s, "xi_s")


@dataclass(frozen=True)
class ChannelParams:
    """
    Parameters of the extended generalized-K envelope R = S·X.
    @param m Fading figure of the multipath component X
    @param xi Shaping factor of the multipath component X
    @param shadowing The shadowing component S, or None when S is constant
    @param omega Average power E[R²]
    """

    m: float
    xi: float
    shadowing: Optional[Shadowing] = None
    omega: float = 1.0

    def __post_init__(self):
        _positive(self.m, "m", 0.5, inclusive=True)
        _positive(self.xi, "xi")
        _positive(self.omega, "omega")
        if self.shadowing is not None and not isinstance(self.shadowing, Shadowing):
            raise DomainError("shadowing must be Shadowing or None")

    @property
    def m_s(self) -> Optional[float]:
        return None if self.shadowing is None else self.shadowing.m_s

    @property
    def xi_s(self) -> Optional[float]:
        return None if self.shadowing is None else self.shadowing.xi_s

    def with_omega(self, omega: float) -> "ChannelParams":
        return replace(self, omega=omega)

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "xi": self.xi,
            "m_s": self.m_s,
            "xi_s": self.xi_s,
            "omega": self.omega,
        }


def egk_params(
    m: float,
    xi: float,
    m_s: Optional[float] = None,
    xi_s: Optional[float] = None,
    omega: float = 1.0,
) -> ChannelParams:
    """Convenience constructor; omitting m_s selects the no-shadowing mode"""
    if m_s is None and xi_s is None:
        return ChannelParams(m, xi, None, omega)
    if m_s is None or xi_s is None:
        raise DomainError("m_s and xi_s must be given together")
    return ChannelParams(m, xi, Shadowing(m_s, xi_s), omega)


@dataclass(frozen=True)
class DerivedBetas:
    beta: float
    beta_s: float


def log_beta(m: float, xi: float) -> float:
    return float(gammaln(m + 1.0 / xi) - gammaln(m))


def derive_betas(params: ChannelParams) -> DerivedBetas:
    beta = math.exp(log_beta(params.m, params.xi))
    if params.shadowing is None:
        return DerivedBetas(beta, 1.0)
    beta_s = math.exp(log_beta(params.m_s, params.xi_s))
    return DerivedBetas(beta, beta_s)


@dataclass(frozen=True)
class OmegaSplit:
    """Average powers of the shadowing (omega_s) and multipath (omega_x) factors"""

    omega_s: float
    omega_x: float

    def __post_init__(self):
        _positive(self.omega_s, "omega_s")
        _positive(self.omega_x, "omega_x")

    @classmethod
    def default(cls, params: ChannelParams) -> "OmegaSplit":
        return cls(params.omega, 1.0)

    def check(self, params: ChannelParams):
        product = self.omega_s * self.omega_x
        if abs(product - params.omega) > _SPLIT_RTOL * params.omega:
            raise DomainError(
                f"omega split {self.omega_s} x {self.omega_x} = {product} does not match omega={params.omega}"
            )
