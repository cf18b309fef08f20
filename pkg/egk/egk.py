from dataclasses import dataclass, field
from dynaconf import Dynaconf, Validator
from egk import foxh
from egk.data import Method, MetricResult
from egk.errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    SpecError,
    UnknownPresetError,
)
from egk.params import (
    ChannelParams,
    DerivedBetas,
    OmegaSplit,
    Shadowing,
    derive_betas,
    egk_params,
    log_beta,
)
from egk.specfun import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    gcq_integrate,
    gcq_rule,
    integrate,
    log_ext_upper_gamma,
)
import logging
import math
import os
from scipy.special import gammaln
from typing import Dict, Mapping, Optional, Union

logger = logging.getLogger(__name__)

MethodLike = Union[Method, str]

DEFAULT_GCQ_NODES = 30
CATALOG_PATH = os.path.join(os.path.dirname(__file__), "presets.yaml")
FREE_NAMES = ("m", "xi", "m_s", "xi_s")


def _method(method: MethodLike, allowed) -> Method:
    try:
        method = Method(method)
    except ValueError:
        raise DomainError(f"unknown method '{method}'")
    if method not in allowed:
        names = ", ".join(m.value for m in allowed)
        raise DomainError(f"method '{method.value}' not available here, use one of: {names}")
    return method


def log_k(params: ChannelParams) -> float:
    """ln(β_s β / Ω), the natural scale of every closed form"""
    value = log_beta(params.m, params.xi) - math.log(params.omega)
    if params.shadowing is not None:
        value += log_beta(params.m_s, params.xi_s)
    return value


def _log_gamma_norm(params: ChannelParams) -> float:
    """ln(Γ(m_s)Γ(m))"""
    value = float(gammaln(params.m))
    if params.shadowing is not None:
        value += float(gammaln(params.m_s))
    return value


def _fallback(
    params: ChannelParams, error: Exception, primary: Method, fallback
) -> MetricResult:
    logger.info(f"Fox-H path failed for {params}: {error}; using {primary.value}")
    result = fallback()
    note = f"foxh failed ({error}); downgraded to {result.method.value}"
    return MetricResult(result.value, result.method, result.err_est, note)


## Envelope density


def log_envelope_pdf(
    params: ChannelParams, r: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """
    Natural logarithm of the envelope density for r > 0.
    """
    if not r > 0 or not math.isfinite(r):
        raise DomainError(f"log_envelope_pdf requires a finite r > 0, got {r}")
    lk = log_k(params)
    m, xi = params.m, params.xi
    log_w = xi * (lk + 2.0 * math.log(r))
    value = (
        math.log(2.0 * xi)
        - _log_gamma_norm(params)
        + m * xi * lk
        + (2.0 * m * xi - 1.0) * math.log(r)
    )
    if params.shadowing is None:
        return value - math.exp(log_w) if log_w < 700.0 else -math.inf
    if log_w > 700.0:
        return -math.inf
    alpha = params.m_s - m * xi / params.xi_s
    beta = xi / params.xi_s
    if log_w < -700.0:
        return value + _log_ext_gamma_small_b(alpha, log_w, beta)
    return value + log_ext_upper_gamma(alpha, 0.0, math.exp(log_w), beta, quad)


def _log_ext_gamma_small_b(alpha: float, log_b: float, beta: float) -> float:
    """Leading term of ln Γ(α, 0, b, β) as b -> 0"""
    if alpha > 0:
        return float(gammaln(alpha))
    if alpha < 0:
        return float(gammaln(-alpha / beta)) - math.log(beta) + alpha / beta * log_b
    return math.log(-log_b / beta)


def _pdf_at_origin(params: ChannelParams) -> float:
    """
    Analytic limit of the density at r = 0, governed by the smallest pole
    m ξ or m_s ξ_s of the Mellin kernel.
    """
    lk = log_k(params)
    m_xi = params.m * params.xi
    if params.shadowing is None:
        edge = 2.0 * m_xi
    else:
        ms_xis = params.m_s * params.xi_s
        edge = 2.0 * min(m_xi, ms_xis)
        if m_xi == ms_xis and edge <= 1.0:
            raise DomainError("density unbounded at origin")
    if edge > 1.0:
        return 0.0
    if edge < 1.0:
        raise DomainError("density unbounded at origin")
    if params.shadowing is None:
        return 2.0 * params.xi * math.exp(0.5 * lk - float(gammaln(params.m)))
    if m_xi < params.m_s * params.xi_s:
        xi, rest = params.xi, float(gammaln(params.m_s - m_xi / params.xi_s))
    else:
        xi, rest = params.xi_s, float(gammaln(params.m - params.m_s * params.xi_s / params.xi))
    return 2.0 * xi * math.exp(0.5 * lk + rest - _log_gamma_norm(params))


def envelope_pdf_result(
    params: ChannelParams,
    r: float,
    method: MethodLike = Method.CLOSED_FORM,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    method = _method(method, (Method.CLOSED_FORM, Method.FOXH))
    if r < 0 or math.isnan(r):
        raise DomainError(f"envelope_pdf requires r >= 0, got {r}")
    if r == 0:
        return MetricResult(_pdf_at_origin(params), Method.CLOSED_FORM, 0.0)

    def direct():
        return MetricResult(
            math.exp(log_envelope_pdf(params, r, quad)), Method.CLOSED_FORM
        )

    if method is Method.CLOSED_FORM:
        return direct()
    try:
        h, err = foxh.foxh_eval_with_error(
            foxh.foxh_pdf_spec(params),
            math.exp(log_k(params)) * r * r,
            rel_tol=quad.rel_tol,
        )
    except (ConvergenceError, SpecError) as e:
        return _fallback(params, e, Method.CLOSED_FORM, direct)
    scale = 2.0 / (r * math.exp(_log_gamma_norm(params)))
    return MetricResult(scale * h, Method.FOXH, scale * err)


def envelope_pdf(
    params: ChannelParams,
    r: float,
    method: MethodLike = Method.CLOSED_FORM,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return envelope_pdf_result(params, r, method, quad).value


def snr_pdf(
    params: ChannelParams,
    gamma_bar: float,
    gamma: float,
    method: MethodLike = Method.CLOSED_FORM,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """Density of the instantaneous SNR γ = γ̄ R² / Ω"""
    if not gamma > 0:
        raise DomainError(f"snr_pdf requires gamma > 0, got {gamma}")
    root = math.sqrt(gamma)
    return envelope_pdf(params.with_omega(gamma_bar), root, method, quad) / (
        2.0 * root
    )


## Distribution functions


def envelope_cdf_result(
    params: ChannelParams,
    r: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    nodes: int = DEFAULT_GCQ_NODES,
) -> MetricResult:
    """
    P(R <= r) by quadrature of the density, by the Gauss-Chebyshev sum of the
    density (N nodes, error estimated against 2N nodes), or by the Fox-H form.
    """
    method = _method(method, (Method.QUADRATURE, Method.GCQ, Method.FOXH))
    if r < 0 or math.isnan(r):
        raise DomainError(f"envelope_cdf requires r >= 0, got {r}")
    if r == 0:
        return MetricResult(0.0, Method.CLOSED_FORM, 0.0)
    if math.isinf(r):
        return MetricResult(1.0, Method.CLOSED_FORM, 0.0)
    pdf = lambda t: math.exp(log_envelope_pdf(params, t, quad))

    def by_quadrature():
        value, err = integrate(pdf, 0.0, r, quad, points=[math.sqrt(params.omega)])
        return MetricResult(min(value, 1.0), Method.QUADRATURE, err)

    if method is Method.QUADRATURE:
        return by_quadrature()
    if method is Method.GCQ:
        if nodes < DEFAULT_GCQ_NODES:
            raise DomainError(f"the GCQ path needs at least 30 nodes, got {nodes}")
        value = gcq_integrate(pdf, 0.0, r, gcq_rule(nodes))
        refined = gcq_integrate(pdf, 0.0, r, gcq_rule(2 * nodes))
        return MetricResult(value, Method.GCQ, abs(refined - value))
    try:
        h, err = foxh.foxh_eval_with_error(
            foxh.foxh_cdf_spec(params),
            math.exp(log_k(params)) * r * r,
            rel_tol=quad.rel_tol,
        )
    except (ConvergenceError, SpecError) as e:
        return _fallback(params, e, Method.QUADRATURE, by_quadrature)
    norm = math.exp(_log_gamma_norm(params))
    return MetricResult(h / norm, Method.FOXH, err / norm)


def envelope_cdf(
    params: ChannelParams,
    r: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    nodes: int = DEFAULT_GCQ_NODES,
) -> float:
    return envelope_cdf_result(params, r, method, quad, nodes).value


def envelope_ccdf_result(
    params: ChannelParams,
    r: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """P(R > r) from the complementary Fox-H form or from the density tail"""
    method = _method(method, (Method.QUADRATURE, Method.FOXH))
    if r < 0 or math.isnan(r):
        raise DomainError(f"envelope_ccdf requires r >= 0, got {r}")
    if r == 0:
        return MetricResult(1.0, Method.CLOSED_FORM, 0.0)
    pdf = lambda t: math.exp(log_envelope_pdf(params, t, quad))

    def by_quadrature():
        value, err = integrate(pdf, r, math.inf, quad)
        return MetricResult(value, Method.QUADRATURE, err)

    if method is Method.QUADRATURE:
        return by_quadrature()
    try:
        h, err = foxh.foxh_eval_with_error(
            foxh.foxh_ccdf_spec(params),
            math.exp(log_k(params)) * r * r,
            rel_tol=quad.rel_tol,
        )
    except (ConvergenceError, SpecError) as e:
        return _fallback(params, e, Method.QUADRATURE, by_quadrature)
    norm = math.exp(_log_gamma_norm(params))
    return MetricResult(h / norm, Method.FOXH, err / norm)


def envelope_ccdf(params: ChannelParams, r: float, method=Method.QUADRATURE) -> float:
    return envelope_ccdf_result(params, r, method).value


def snr_cdf_result(
    params: ChannelParams,
    gamma_bar: float,
    gamma: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    nodes: int = DEFAULT_GCQ_NODES,
) -> MetricResult:
    if gamma < 0 or math.isnan(gamma):
        raise DomainError(f"snr_cdf requires gamma >= 0, got {gamma}")
    return envelope_cdf_result(
        params.with_omega(gamma_bar), math.sqrt(gamma), method, quad, nodes
    )


def snr_cdf(
    params: ChannelParams,
    gamma_bar: float,
    gamma: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    nodes: int = DEFAULT_GCQ_NODES,
) -> float:
    return snr_cdf_result(params, gamma_bar, gamma, method, quad, nodes).value


## Moments and MGF


def moment(params: ChannelParams, k: float) -> float:
    """
    E[R^k] = Γ(m_s + k/(2ξ_s)) Γ(m + k/(2ξ)) / (Γ(m_s)Γ(m)) · (Ω/(β_s β))^(k/2)
    """
    if not k >= 0 or math.isinf(k):
        raise DomainError(f"moment order must be finite and >= 0, got {k}")
    if k == 0:
        return 1.0
    value = float(gammaln(params.m + k / (2.0 * params.xi))) - float(
        gammaln(params.m)
    )
    if params.shadowing is not None:
        value += float(gammaln(params.m_s + k / (2.0 * params.xi_s))) - float(
            gammaln(params.m_s)
        )
    return math.exp(value - 0.5 * k * log_k(params))


def snr_moment(params: ChannelParams, gamma_bar: float, k: float) -> float:
    return moment(params.with_omega(gamma_bar), 2.0 * k)


def mgf_result(
    params: ChannelParams,
    gamma_bar: float,
    s: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """
    E[exp(-sγ)]. The quadrature runs in y = γ/γ̄ so the density stays on a
    unit scale for any γ̄.
    """
    method = _method(method, (Method.QUADRATURE, Method.FOXH))
    if not s > 0:
        raise DomainError(f"mgf requires s > 0, got {s}")
    if not gamma_bar > 0:
        raise DomainError(f"mgf requires gamma_bar > 0, got {gamma_bar}")
    unit = params.with_omega(1.0)

    def by_quadrature():
        f = lambda y: math.exp(-s * gamma_bar * y) * snr_pdf(unit, 1.0, y, quad=quad)
        value, err = integrate(f, 0.0, math.inf, quad, points=[1.0])
        return MetricResult(value, Method.QUADRATURE, err)

    if method is Method.QUADRATURE:
        return by_quadrature()
    try:
        h, err = foxh.foxh_eval_with_error(
            foxh.foxh_mgf_spec(params),
            math.exp(log_k(unit)) / (gamma_bar * s),
            rel_tol=quad.rel_tol,
        )
    except (ConvergenceError, SpecError) as e:
        return _fallback(params, e, Method.QUADRATURE, by_quadrature)
    norm = math.exp(_log_gamma_norm(params))
    return MetricResult(h / norm, Method.FOXH, err / norm)


def mgf(
    params: ChannelParams,
    gamma_bar: float,
    s: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return mgf_result(params, gamma_bar, s, method, quad).value


## Preset catalog


def _resolve_slot(slot, free: Mapping[str, float], missing: set):
    if slot is None:
        return None
    if isinstance(slot, (int, float)) and not isinstance(slot, bool):
        return float(slot)
    text = str(slot).strip()
    name, _, divisor = text.partition("/")
    name = name.strip()
    if name not in FREE_NAMES:
        raise ConfigError(f"invalid preset slot '{slot}'")
    if free.get(name) is None:
        missing.add(name)
        return math.nan
    value = float(free[name])
    return value / float(divisor) if divisor else value


@dataclass(frozen=True)
class Preset:
    """
    A named special case. Template slots hold numbers, free parameter names
    (m, xi, m_s, xi_s) or `name/number`; null shadowing slots select the
    no-shadowing mode.
    """

    name: str
    template: Dict[str, object] = field(hash=False)
    source: str = ""

    @property
    def free_names(self):
        names = []
        for slot in self.template.values():
            if isinstance(slot, str):
                names.append(slot.partition("/")[0].strip())
        return tuple(n for n in FREE_NAMES if n in names)

    def template_string(self) -> str:
        slots = [self.template.get(n) for n in FREE_NAMES]
        if slots[2] is None:
            slots = slots[:2] + ["inf", "-"]
        return "(" + ", ".join(_format_slot(s) for s in slots) + ")"

    def params(self, omega: float = 1.0, **free) -> ChannelParams:
        unknown = set(free) - set(FREE_NAMES)
        if unknown:
            raise DomainError(f"unknown preset parameters: {', '.join(sorted(unknown))}")
        missing = set()
        values = {
            n: _resolve_slot(self.template.get(n), free, missing) for n in FREE_NAMES
        }
        if missing:
            raise DomainError(
                f"preset '{self.name}' needs values for: {', '.join(sorted(missing))}"
            )
        return egk_params(values["m"], values["xi"], values["m_s"], values["xi_s"], omega)


def _format_slot(slot) -> str:
    if isinstance(slot, float) and slot.is_integer():
        return str(int(slot))
    return str(slot)


def load_catalog(path: Optional[str] = None) -> Dict[str, Preset]:
    """
    Reads a preset catalog (yaml, top-level key `presets`) with Dynaconf.
    @param path Catalog file, defaults to the packaged catalog
    """
    path = path or CATALOG_PATH
    if not os.path.isfile(path):
        raise ConfigError(f"preset catalog not found: {path}")
    settings = Dynaconf(settings_files=[path], envvar_prefix="EGK_CATALOG")
    settings.validators.register(
        Validator("presets", must_exist=True, is_type_of=dict)
    )
    try:
        settings.validators.validate()
    except Exception as e:
        raise ConfigError(f"invalid preset catalog {path}: {e}")

    catalog = {}
    for name, row in settings.presets.items():
        name = str(name).lower()
        if name in catalog:
            raise ConfigError(f"duplicate preset '{name}' in {path}")
        template = {n: row.get(n) for n in FREE_NAMES}
        if template["m"] is None or template["xi"] is None:
            raise ConfigError(f"preset '{name}' needs m and xi slots")
        if (template["m_s"] is None) != (template["xi_s"] is None):
            raise ConfigError(f"preset '{name}' must set both or neither of m_s, xi_s")
        preset_ = Preset(name, template, str(row.get("source", "")))
        # numeric slots must already satisfy the parameter invariants
        trial = {n: 1.0 for n in preset_.free_names}
        try:
            preset_.params(1.0, **trial)
        except DomainError as e:
            raise ConfigError(f"preset '{name}' is invalid: {e}")
        catalog[name] = preset_
    logger.debug(f"Loaded {len(catalog)} presets from {path}")
    return catalog


def preset(
    name: str,
    omega: float = 1.0,
    catalog: Optional[Mapping[str, Preset]] = None,
    **free,
) -> ChannelParams:
    """
    Parameters of a named special case.
    @param name Catalog name, e.g. "rayleigh" or "generalized-k"
    @param omega Average power
    @param catalog A loaded catalog, defaults to the packaged one
    @param free Values for the free slots of the template (m, xi, m_s, xi_s)
    """
    catalog = catalog if catalog is not None else load_catalog()
    key = str(name).lower()
    if key not in catalog:
        raise UnknownPresetError(name, catalog.keys())
    return catalog[key].params(omega, **free)
