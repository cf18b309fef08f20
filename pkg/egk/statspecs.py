from dataclasses import dataclass, field
from egk.data import Method, MetricResult
from egk.errors import DomainError
from egk.params import ChannelParams, OmegaSplit
from egk.specfun import DEFAULT_QUADRATURE, QuadratureSpec
import pluggy
from typing import Any, Callable, List, Optional, Tuple

hookspec = pluggy.HookspecMarker("egk.statistic")


@dataclass
class EvalArgs:
    """
    Arguments of a single statistic evaluation, as collected by the CLI.
    Unset arguments are None.
    """

    params: ChannelParams
    method: Optional[Method] = None
    r: Optional[float] = None
    gamma: Optional[float] = None
    gamma_bar: Optional[float] = None
    k: Optional[float] = None
    s: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    gamma_th: Optional[float] = None
    c_th: Optional[float] = None
    bandwidth: float = 1.0
    f_s: Optional[float] = None
    f_x: Optional[float] = None
    split: Optional[OmegaSplit] = None
    n_terms: int = 8
    nodes: int = 30
    variant: str = "derived"
    quad: QuadratureSpec = DEFAULT_QUADRATURE

    def need(self, name: str, flag: str = None) -> Any:
        value = getattr(self, name)
        if value is None:
            raise DomainError(f"--{flag or name.replace('_', '-')} is required here")
        return value


@dataclass(frozen=True)
class StatisticSpec:
    """
    A statistic the CLI can evaluate.
    @param name Name used on the command line, e.g. "abep"
    @param description One line for the help output
    @param methods The evaluation paths, the first one is the default
    @param evaluate Callable mapping EvalArgs (with a resolved method) to a
        MetricResult
    """

    name: str
    description: str
    methods: Tuple[Method, ...]
    evaluate: Callable[[EvalArgs], MetricResult] = field(compare=False)

    @property
    def default_method(self) -> Method:
        return self.methods[0]


@hookspec
def statistics() -> List[StatisticSpec]:
    """
    Returns the statistics a plugin contributes. Names must be unique across
    all installed plugins; the built-in statistics take precedence.
    """
