import egk
from egk import egk as dist
from egk import metrics, secondorder
from egk.data import Method, MetricResult
from egk.errors import DomainError
from egk.statspecs import EvalArgs, StatisticSpec
import math
from typing import List

"""Statistics shipped with the egk package"""

CF, FOXH, GCQ, QUAD, SERIES = (
    Method.CLOSED_FORM,
    Method.FOXH,
    Method.GCQ,
    Method.QUADRATURE,
    Method.SERIES,
)


def _pdf(args: EvalArgs) -> MetricResult:
    return dist.envelope_pdf_result(args.params, args.need("r"), args.method, args.quad)


def _snr_pdf(args: EvalArgs) -> MetricResult:
    gamma = args.need("gamma")
    gamma_bar = args.need("gamma_bar", "gbar")
    if not gamma > 0:
        raise DomainError(f"snr-pdf requires gamma > 0, got {gamma}")
    root = math.sqrt(gamma)
    res = dist.envelope_pdf_result(
        args.params.with_omega(gamma_bar), root, args.method, args.quad
    )
    scale = 0.5 / root
    err = None if res.err_est is None else scale * res.err_est
    return MetricResult(scale * res.value, res.method, err, res.note)


def _cdf(args: EvalArgs) -> MetricResult:
    return dist.envelope_cdf_result(
        args.params, args.need("r"), args.method, args.quad, args.nodes
    )


def _ccdf(args: EvalArgs) -> MetricResult:
    return dist.envelope_ccdf_result(args.params, args.need("r"), args.method, args.quad)


def _snr_cdf(args: EvalArgs) -> MetricResult:
    return dist.snr_cdf_result(
        args.params,
        args.need("gamma_bar", "gbar"),
        args.need("gamma"),
        args.method,
        args.quad,
        args.nodes,
    )


def _moment(args: EvalArgs) -> MetricResult:
    return MetricResult(dist.moment(args.params, args.need("k")), CF, 0.0)


def _snr_moment(args: EvalArgs) -> MetricResult:
    value = dist.snr_moment(args.params, args.need("gamma_bar", "gbar"), args.need("k"))
    return MetricResult(value, CF, 0.0)


def _mgf(args: EvalArgs) -> MetricResult:
    return dist.mgf_result(
        args.params, args.need("gamma_bar", "gbar"), args.need("s"), args.method, args.quad
    )


def _aof(args: EvalArgs) -> MetricResult:
    return metrics.aof_result(args.params)


def _abep(args: EvalArgs) -> MetricResult:
    mod = metrics.ModulationSpec(args.need("a"), args.need("b"))
    return metrics.abep_result(
        args.params, args.need("gamma_bar", "gbar"), mod, args.method, args.quad
    )


def _outage(args: EvalArgs) -> MetricResult:
    return metrics.outage_probability_result(
        args.params,
        args.need("gamma_bar", "gbar"),
        args.need("gamma_th", "gth"),
        args.method,
        args.quad,
    )


def _outage_capacity(args: EvalArgs) -> MetricResult:
    cap = metrics.CapacitySpec(args.bandwidth, args.need("gamma_bar", "gbar"))
    return metrics.outage_capacity_result(
        args.params, cap, args.need("c_th", "cth"), args.method, args.quad
    )


def _capacity(args: EvalArgs) -> MetricResult:
    cap = metrics.CapacitySpec(args.bandwidth, args.need("gamma_bar", "gbar"))
    return metrics.avg_capacity_result(args.params, cap, args.method, args.quad)


def _doppler(args: EvalArgs) -> secondorder.DopplerSpec:
    return secondorder.DopplerSpec(args.f_s or 0.0, args.need("f_x", "fx"))


def _lcr(args: EvalArgs) -> MetricResult:
    return secondorder.lcr_result(
        args.params,
        args.split,
        _doppler(args),
        args.need("r"),
        args.method,
        args.n_terms,
        args.variant,
        args.quad,
    )


def _afd(args: EvalArgs) -> MetricResult:
    return secondorder.afd_result(
        args.params,
        args.split,
        _doppler(args),
        args.need("r"),
        args.method,
        args.n_terms,
        args.quad,
    )


@egk.statistic
def statistics() -> List[StatisticSpec]:
    return [
        StatisticSpec("pdf", "envelope density p_R(r)", (CF, FOXH), _pdf),
        StatisticSpec("snr-pdf", "SNR density p_G(gamma)", (CF, FOXH), _snr_pdf),
        StatisticSpec("cdf", "envelope CDF P(R <= r)", (QUAD, GCQ, FOXH), _cdf),
        StatisticSpec("ccdf", "envelope CCDF P(R > r)", (QUAD, FOXH), _ccdf),
        StatisticSpec("snr-cdf", "SNR CDF P(G <= gamma)", (QUAD, GCQ, FOXH), _snr_cdf),
        StatisticSpec("moment", "envelope moment E[R^k]", (CF,), _moment),
        StatisticSpec("snr-moment", "SNR moment E[G^k]", (CF,), _snr_moment),
        StatisticSpec("mgf", "SNR moment generating function E[exp(-sG)]", (QUAD, FOXH), _mgf),
        StatisticSpec("aof", "amount of fading", (CF,), _aof),
        StatisticSpec("abep", "average bit error probability", (QUAD, FOXH), _abep),
        StatisticSpec("outage", "outage probability P(G < gth)", (QUAD, GCQ, FOXH), _outage),
        StatisticSpec(
            "outage-capacity",
            "probability that the capacity falls below cth",
            (QUAD, GCQ, FOXH),
            _outage_capacity,
        ),
        StatisticSpec("capacity", "average capacity in bits/s", (QUAD, FOXH), _capacity),
        StatisticSpec("lcr", "level crossing rate at r", (QUAD, SERIES), _lcr),
        StatisticSpec("afd", "average fade duration at r", (QUAD, SERIES), _afd),
    ]
