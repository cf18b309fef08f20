import argparse
import csv
from dataclasses import asdict, replace
from datetime import datetime, timezone
from dynaconf import Dynaconf, Validator
from dynaconf.base import Settings
import egk
from egk import builtin, logger, metrics, montecarlo, secondorder, statspecs
from egk import egk as dist
from egk.data import Method, RunRecord, RunRecordEncoder, json_number
from egk.errors import ConfigError, DomainError, EgkError, UnknownPresetError
from egk.params import ChannelParams, OmegaSplit
from egk.specfun import QuadratureSpec
from egk.stoppable_worker import run_concurrently
from egk.statspecs import EvalArgs, StatisticSpec
import io
import json
from logging import Logger
import math
import numpy as np
import pluggy
import sys
from typing import Dict, List

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

SWEEP_VARIABLES = ("r", "gamma", "gamma_bar", "m", "xi", "m_s", "xi_s", "gamma_th")
# |z| above this fails a Monte Carlo comparison
Z_LIMIT = 4.0
PILOT_SAMPLES = 100_000
PILOT_QUANTILES = (0.1, 0.3, 0.5, 0.7, 0.9)
OUTAGE_RATIOS = (0.1, 1.0, 3.0)


def validate_egk_config(config: Settings):
    """
    Validates the given Dynaconf object, potentially adding new entries for the default values.
    Throws if the config is invalid.
    """
    levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
    validators = [
        Validator("logging.console", is_type_of=bool, required=True, default=True),
        Validator("logging.file", is_type_of=bool, required=True, default=False),
        Validator("logging.console_verbosity", is_in=levels, default="WARNING"),
        Validator("logging.file_verbosity", is_in=levels, default="INFO"),
        Validator("logging.filename", is_type_of=str, default="egk.log"),
        Validator("threads", is_type_of=int, gte=0, default=0),
        Validator("quadrature.abs_tol", is_type_of=(int, float), gt=0, default=1e-12),
        Validator("quadrature.rel_tol", is_type_of=(int, float), gt=0, default=1e-10),
        Validator("quadrature.max_subdivisions", is_type_of=int, gte=1, default=200),
        Validator("montecarlo.samples", is_type_of=int, gte=1, default=1_000_000),
        Validator("montecarlo.seed", is_type_of=int, gte=0, default=42),
        Validator("secondorder.series_terms", is_type_of=int, gte=0, default=8),
        Validator("gcq.nodes", is_type_of=int, gte=30, default=30),
        Validator("catalog", is_type_of=str, default=dist.CATALOG_PATH),
    ]
    config.validators.register(*validators)
    config.validators.validate()


def load_statistics(log: Logger = None) -> Dict[str, StatisticSpec]:
    """
    Collects the statistics of the built-in module and of every installed
    `egk.statistic` plugin. Built-in names win over plugin names.
    """
    statistics = pluggy.PluginManager("egk.statistic")
    statistics.add_hookspecs(statspecs)
    statistics.register(builtin)
    statistics.load_setuptools_entrypoints("egk.statistic")
    registry = {}
    # hook results arrive in reverse registration order
    for batch in reversed(statistics.hook.statistics()):
        for spec in batch:
            if spec.name in registry:
                if log:
                    log.warning(f"Ignoring duplicate statistic '{spec.name}'")
                continue
            registry[spec.name] = spec
    return registry


## Argument handling


def _fail(message: str, code: int) -> int:
    print(f"egk: error: {message}", file=sys.stderr)
    return code


def _emit(text: str, path: str = None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _quadrature(args, config: Settings) -> QuadratureSpec:
    q = config.quadrature
    rel_tol = args.tol if getattr(args, "tol", None) else q.rel_tol
    return QuadratureSpec(float(q.abs_tol), float(rel_tol), int(q.max_subdivisions))


def resolve_params(args, config: Settings) -> ChannelParams:
    """Channel parameters from --preset or from --m/--xi[/--ms/--xis]"""
    if args.preset:
        free = {
            name: value
            for name, value in (
                ("m", args.m),
                ("xi", args.xi),
                ("m_s", args.ms),
                ("xi_s", args.xis),
            )
            if value is not None
        }
        catalog = dist.load_catalog(config.catalog)
        return dist.preset(args.preset, args.omega, catalog, **free)
    if args.m is None or args.xi is None:
        raise DomainError("either --preset or both --m and --xi are required")
    return dist.egk_params(args.m, args.xi, args.ms, args.xis, args.omega)


def _split(args, params: ChannelParams):
    if getattr(args, "split_s", None) is None:
        return None
    return OmegaSplit(args.split_s, params.omega / args.split_s)


def _method_for(spec: StatisticSpec, name: str) -> Method:
    if not name:
        return spec.default_method
    try:
        method = Method(name)
    except ValueError:
        method = None
    if method not in spec.methods:
        names = ", ".join(m.value for m in spec.methods)
        raise DomainError(f"method '{name}' not available for {spec.name}, use one of: {names}")
    return method


def build_eval_args(args, config: Settings, spec: StatisticSpec) -> EvalArgs:
    params = resolve_params(args, config)
    return EvalArgs(
        params=params,
        method=_method_for(spec, args.method),
        r=args.r,
        gamma=args.gamma,
        gamma_bar=args.gbar,
        k=args.k,
        s=args.s,
        a=args.a,
        b=args.b,
        gamma_th=args.gth,
        c_th=args.cth,
        bandwidth=args.bw,
        f_s=args.fs,
        f_x=args.fx,
        split=_split(args, params),
        n_terms=args.terms if args.terms is not None else config.secondorder.series_terms,
        nodes=args.nodes if args.nodes is not None else config.gcq.nodes,
        variant=args.variant,
        quad=_quadrature(args, config),
    )


def echo_inputs(ev: EvalArgs) -> dict:
    inputs = ev.params.as_dict()
    for name in ("r", "gamma", "gamma_bar", "k", "s", "a", "b", "gamma_th", "c_th", "f_s", "f_x"):
        value = getattr(ev, name)
        if value is not None:
            inputs[name] = value
    if ev.c_th is not None or ev.bandwidth != 1.0:
        inputs["bandwidth"] = ev.bandwidth
    if ev.split is not None:
        inputs["split"] = asdict(ev.split)
    return inputs


def _lookup(name: str, log: Logger) -> StatisticSpec:
    registry = load_statistics(log)
    if name not in registry:
        raise DomainError(
            f"unknown statistic '{name}', valid names: {', '.join(sorted(registry))}"
        )
    return registry[name]


## Subcommands


def cmd_eval(args, config: Settings, log: Logger) -> int:
    spec = _lookup(args.statistic, log)
    ev = build_eval_args(args, config, spec)
    log.info(f"Evaluating {spec.name} with method {ev.method.value}")
    result = spec.evaluate(ev)
    payload = {
        "statistic": spec.name,
        "inputs": echo_inputs(ev),
        "value": json_number(result.value),
        "err_est": json_number(result.err_est),
        "method": result.method.value,
    }
    if result.note:
        payload["note"] = result.note
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def sweep_grid(args) -> List[float]:
    if args.grid:
        try:
            grid = [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError:
            raise DomainError(f"--grid must be a comma separated list of numbers, got '{args.grid}'")
    else:
        if args.start is None or args.stop is None or args.count is None:
            raise DomainError("a sweep needs --grid or all of --start, --stop, --count")
        if args.count < 1:
            raise DomainError(f"--count must be positive, got {args.count}")
        if args.scale == "log":
            if not args.start > 0 or not args.stop > 0:
                raise DomainError("a log grid needs positive --start and --stop")
            grid = list(np.geomspace(args.start, args.stop, args.count))
        else:
            grid = list(np.linspace(args.start, args.stop, args.count))
    if not grid:
        raise DomainError("the sweep grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("the sweep grid must be strictly increasing")
    return [float(v) for v in grid]


def at_grid_point(ev: EvalArgs, variable: str, value: float) -> EvalArgs:
    """A copy of ev with one variable set; parameter invariants are rechecked"""
    params = ev.params
    if variable in ("m", "xi"):
        return replace(ev, params=replace(params, **{variable: value}))
    if variable in ("m_s", "xi_s"):
        if params.shadowing is None:
            raise DomainError(f"sweeping {variable} needs a shadowing component")
        shadowing = replace(params.shadowing, **{variable: value})
        return replace(ev, params=replace(params, shadowing=shadowing))
    return replace(ev, **{variable: value})


def cmd_sweep(args, config: Settings, log: Logger) -> int:
    spec = _lookup(args.statistic, log)
    grid = sweep_grid(args)
    base = build_eval_args(args, config, spec)
    points = [at_grid_point(base, args.variable, value) for value in grid]
    log.info(f"Sweeping {spec.name} over {len(grid)} values of {args.variable}")
    results = run_concurrently(spec.evaluate, points, config.threads)

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["variable", "value", "method", "err_est"])
    failed = 0
    for value, result in zip(grid, results):
        if isinstance(result, Exception):
            log.warning(f"{spec.name} failed at {args.variable}={value}: {result}")
            writer.writerow([repr(value), "", Method.FAILED.value, ""])
            failed += 1
            continue
        err = "" if result.err_est is None else repr(float(result.err_est))
        writer.writerow([repr(value), repr(float(result.value)), result.method.value, err])
    _emit(out.getvalue(), args.out)
    if failed:
        log.error(f"{failed} of {len(grid)} sweep points failed")
        return EXIT_NUMERICAL
    return EXIT_OK


def validation_checks(params: ChannelParams, gamma_bar: float, cfg, quad, beta_scale: float = 1.0):
    """
    Pairs of Monte Carlo statistics and their analytic values. beta_scale
    evaluates the analytic side as if β were multiplied by that factor.
    """
    scaled = params.with_omega(params.omega / beta_scale)
    scaled_gbar = gamma_bar / beta_scale
    pilot = montecarlo.sample_egk(params, cfg, montecarlo.pilot_stream(cfg.seed), PILOT_SAMPLES)
    checks = []
    for k in (1, 2, 4):
        checks.append((f"moment k={k}", montecarlo.Moment(k), dist.moment(scaled, k)))
    for p, x in zip(PILOT_QUANTILES, np.quantile(pilot, PILOT_QUANTILES)):
        x = float(x)
        checks.append(
            (f"cdf at q{p:g}", montecarlo.CdfAt(x), dist.envelope_cdf(scaled, x, quad=quad))
        )
    for a, b in ((1.0, 1.0), (1.0, 0.5)):
        closed = metrics.abep(params, scaled_gbar, metrics.ModulationSpec(a, b), quad=quad)
        checks.append((f"abep a={a:g} b={b:g}", montecarlo.Abep(a, b, gamma_bar), closed))
    for ratio in OUTAGE_RATIOS:
        gamma_th = ratio * gamma_bar
        closed = metrics.outage_probability(params, scaled_gbar, gamma_th, quad=quad)
        checks.append((f"outage gth={gamma_th:g}", montecarlo.Outage(gamma_bar, gamma_th), closed))
    closed = metrics.avg_capacity(params, metrics.CapacitySpec(1.0, scaled_gbar), quad=quad)
    checks.append(("capacity", montecarlo.Capacity(gamma_bar), closed))
    checks.append(("aof", montecarlo.AmountOfFading(gamma_bar), metrics.aof(params)))
    return checks


def cmd_validate(args, config: Settings, log: Logger) -> int:
    params = resolve_params(args, config)
    if not args.beta_scale > 0:
        raise DomainError(f"--beta-scale must be positive, got {args.beta_scale}")
    samples = args.samples if args.samples is not None else config.montecarlo.samples
    seed = args.seed if args.seed is not None else config.montecarlo.seed
    cfg = montecarlo.SimConfig(samples, seed, _split(args, params))
    checks = validation_checks(params, args.gbar, cfg, _quadrature(args, config), args.beta_scale)
    estimates = montecarlo.estimate_all([c[1] for c in checks], params, cfg, config.threads)

    rows, worst = [], 0.0
    for (name, _, closed), est in zip(checks, estimates):
        z = est.z_score(closed)
        worst = max(worst, abs(z))
        rows.append(
            {
                "check": name,
                "closed_form": json_number(closed),
                "estimate": json_number(est.value),
                "std_error": json_number(est.std_error),
                "z": json_number(z),
            }
        )
        if abs(z) > Z_LIMIT:
            log.warning(f"{name}: closed form {closed:.6g} vs estimate {est.value:.6g} (z={z:.2f})")
    inputs = params.as_dict()
    inputs.update(gamma_bar=args.gbar, samples=samples)
    if args.beta_scale != 1.0:
        inputs["beta_scale"] = args.beta_scale
    record = RunRecord(
        inputs,
        rows,
        egk.__version__,
        seed,
        datetime.now(timezone.utc).isoformat(),
    )
    _emit(json.dumps(record, cls=RunRecordEncoder, indent=2) + "\n", args.out)
    if worst > Z_LIMIT:
        log.error(f"Validation failed, largest |z| = {worst:.2f}")
        return EXIT_VALIDATION
    log.info(f"Validation passed, largest |z| = {worst:.2f}")
    return EXIT_OK


def cmd_presets(args, config: Settings, log: Logger) -> int:
    catalog = dist.load_catalog(config.catalog)
    lines = [f"{'name':<26} {'(m, xi, m_s, xi_s)':<24} source"]
    for name in sorted(catalog):
        preset = catalog[name]
        lines.append(f"{name:<26} {preset.template_string():<24} {preset.source}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args, config: Settings, log: Logger) -> int:
    params = resolve_params(args, config)
    split = _split(args, params)
    dop = secondorder.DopplerSpec(args.fs, args.fx)
    seed = args.seed if args.seed is not None else config.montecarlo.seed
    pc = secondorder.ProcessConfig(args.duration, args.dt, args.sinusoids, seed)
    r = args.r if args.r is not None else math.sqrt(params.omega)
    quad = _quadrature(args, config)

    series = secondorder.simulate_process(params, split, dop, pc)
    if args.export:
        secondorder.export_time_series(series, args.export)
        log.info(f"Wrote {len(series.time)} samples to {args.export}")
    est = secondorder.empirical_second_order(series, r)
    lcr = secondorder.lcr_integral(params, split, dop, r, quad)
    payload = {
        "statistic": "simulate",
        "inputs": dict(
            params.as_dict(),
            r=r,
            f_s=dop.f_s,
            f_x=dop.f_x,
            duration=pc.duration,
            dt=pc.dt,
            n_sinusoids=pc.n_sinusoids,
            seed=seed,
        ),
        "empirical": {
            "lcr": json_number(est.lcr),
            "afd": json_number(est.afd),
            "cdf": json_number(est.cdf),
            "crossings": est.crossings,
        },
        "analytic": {
            "lcr": json_number(lcr),
            "afd": json_number(secondorder.afd(params, split, dop, r, quad=quad)),
            "cdf": json_number(dist.envelope_cdf(params, r, quad=quad)),
        },
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


## Parser


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="path to a configuration file")
    common.add_argument("--out", help="write results to this file instead of stdout")
    common.add_argument("--tol", type=float, help="relative quadrature tolerance")

    channel = argparse.ArgumentParser(add_help=False)
    channel.add_argument("--preset", help="named special case, see `egk presets`")
    channel.add_argument("--m", type=float, help="fading figure")
    channel.add_argument("--xi", type=float, help="fading shaping factor")
    channel.add_argument("--ms", type=float, help="shadowing figure")
    channel.add_argument("--xis", type=float, help="shadowing shaping factor")
    channel.add_argument("--omega", type=float, default=1.0, help="average power")
    channel.add_argument("--split-s", type=float, help="shadowing power Omega_S")

    statistic = argparse.ArgumentParser(add_help=False)
    statistic.add_argument("statistic", help="statistic name, e.g. pdf, abep, lcr")
    statistic.add_argument("--method", help="evaluation path: closed-form, foxh, gcq, quadrature, series")
    statistic.add_argument("--r", type=float, help="envelope level")
    statistic.add_argument("--gamma", type=float, help="instantaneous SNR")
    statistic.add_argument("--gbar", type=float, help="average SNR")
    statistic.add_argument("--k", type=float, help="moment order")
    statistic.add_argument("--s", type=float, help="MGF argument")
    statistic.add_argument("--a", type=float, help="modulation parameter a")
    statistic.add_argument("--b", type=float, help="modulation parameter b")
    statistic.add_argument("--gth", type=float, help="outage SNR threshold")
    statistic.add_argument("--cth", type=float, help="outage capacity threshold in bits/s")
    statistic.add_argument("--bw", type=float, default=1.0, help="bandwidth in Hz")
    statistic.add_argument("--fs", type=float, help="shadowing Doppler shift in Hz")
    statistic.add_argument("--fx", type=float, help="multipath Doppler shift in Hz")
    statistic.add_argument("--terms", type=int, help="series truncation order")
    statistic.add_argument("--nodes", type=int, help="Gauss-Chebyshev nodes")
    statistic.add_argument(
        "--variant", choices=secondorder.VARIANTS, default="derived", help="LCR series form"
    )

    parser = argparse.ArgumentParser(
        prog="egk", description="Extended generalized-K fading statistics"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser(
        "eval", parents=[common, channel, statistic], help="evaluate one statistic"
    )
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser(
        "sweep", parents=[common, channel, statistic], help="evaluate a statistic on a grid"
    )
    p.add_argument("--variable", required=True, choices=SWEEP_VARIABLES)
    p.add_argument("--grid", help="comma separated grid values")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.set_defaults(func=cmd_sweep)

    p = commands.add_parser(
        "validate", parents=[common, channel], help="compare closed forms with Monte Carlo"
    )
    p.add_argument("--gbar", type=float, default=1.0, help="average SNR")
    p.add_argument("--samples", type=int, help="number of Monte Carlo samples")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--beta-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = commands.add_parser("presets", parents=[common], help="list the preset catalog")
    p.set_defaults(func=cmd_presets)

    p = commands.add_parser(
        "simulate", parents=[common, channel], help="simulate the envelope process"
    )
    p.add_argument("--fs", type=float, default=0.0, help="shadowing Doppler shift in Hz")
    p.add_argument("--fx", type=float, required=True, help="multipath Doppler shift in Hz")
    p.add_argument("--r", type=float, help="level, defaults to sqrt(omega)")
    p.add_argument("--duration", type=float, default=500.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--sinusoids", type=int, default=64)
    p.add_argument("--seed", type=int)
    p.add_argument("--export", help="write the time series to this CSV file")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: List[str] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    ## Default list of settings files for Dynaconf to parse.
    settings_files = ["config.yaml", "config.yml"]
    if args.config:
        if not args.config.endswith("yaml") and not args.config.endswith("yml"):
            return _fail("Please provide a `yaml` or `yml` configuration file.", EXIT_USAGE)
        ## Allow users to provide a custom config file that takes precedence.
        settings_files = [args.config]

    config = Dynaconf(
        settings_files=settings_files,
        load_dotenv=True,
        envvar_prefix="EGK",
    )
    try:
        validate_egk_config(config)
    except Exception as e:
        return _fail(f"Invalid config: {e}", EXIT_USAGE)

    log = logger.setup(config.logging, "egk")
    try:
        return args.func(args, config, log)
    except (DomainError, UnknownPresetError, ConfigError) as e:
        return _fail(str(e), EXIT_USAGE)
    except EgkError as e:
        log.error(f"Numerical failure: {e}")
        return _fail(str(e), EXIT_NUMERICAL)
    except (ArithmeticError, ValueError) as e:
        log.error(f"Numerical failure: {e}")
        return _fail(f"numerical failure: {e}", EXIT_NUMERICAL)


if __name__ == "__main__":
    sys.exit(main())
