"""
CLI module for KP Torus Lab.

This module provides the Click CLI interface. Every experiment command takes
its parameters from an optional YAML file (--config) overridden by flags, runs
the experiment and writes its reports. Exit codes: 0 success, 1 usage or
configuration error, 2 acceptance violation.
"""

import logging
import math
import time
import typing
from typing import Any, Callable, Dict, List, Literal, Optional

import click
import numpy as np
from colorama import Fore, Style, init
from pydantic import ValidationError

from src.bilinear_ops import schrodinger_factorization_check
from src.bourgain_norms import NormParams, norm_family, weight_table
from src.config import COMMAND_PARAMS, ExperimentConfig, get_config, setup_logging
from src.counting import (
    Annulus,
    annulus_counts,
    delta_grid,
    divisor_sum_table,
    dyadic_radii,
    loglog_slope,
    max_counts_over_deltas,
    dyadic_class_counts,
    parity_class_table,
    small_region_max_count,
    sum_two_squares_table,
)
from src.errors import (
    HypothesisViolation,
    PicardDivergenceError,
    SolverInstabilityError,
    StabilityError,
)
from src.estimate_probe import (
    CASE_DESCRIPTIONS,
    ProbeCase,
    check_hypotheses,
    duality_check,
    extremizer_search,
    kernel_sum_sweep,
    meps_chain_check,
    preset,
    probe_time_localization,
    require_hypotheses,
    scaling_sweep,
)
from src.file_parser import coerce_value, normalise_parameters, parse_config_file
from src.fourier_field import GridSpec, lebesgue_norm, random_spatial, random_spectrum
from src.kp_solver import (
    SolverConfig,
    cosine_data,
    duhamel_picard,
    l2_drift,
    lipschitz_probe,
    solve_cauchy,
    time_step_convergence,
)
from src.phase_resonance import DispersionParams, resonance_identity_sweep
from src.reporter import (
    generate_report_directory,
    save_checkpoints,
    write_csv,
    write_json,
    write_summary_markdown,
)

# Initialize colorama
init()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ACCEPTANCE = 2

# Half-integer shifts and the residue of |2 eta - 2 delta|^2 mod 4 that must carry every point
PARITY_CLASSES = {
    (0.5, 0.5): 2,
    (0.0, 0.5): 1,
    (0.5, 0.0): 1,
    (0.5, 1.0): 1,
    (1.0, 0.5): 1,
}

# Time grid used by the time-localisation probe; the narrowest cutoff must be resolved
TIME_LOC_MIN_J = 256
# Largest tolerated growth of the ratio as T -> 0, in log-log slope against T
TIME_LOC_MAX_GROWTH = 0.2

COMMAND_HELP = {
    "count": "Lattice point counts in annuli, sum-of-two-squares and growth exponent fits.",
    "resonance": "Resonance identity sweep and the Schroedinger factorization check.",
    "norms": "Fourier restriction norms of a random spectrum, optionally with per-mode weights.",
    "probe": "Probe one estimate: extremizer search, kernel sum or time localisation.",
    "sweep": "Best probe ratio across truncation sizes with a log-log growth fit.",
    "solve": "Pseudospectral Cauchy solve with conservation, convergence and Lipschitz diagnostics.",
    "picard": "Duhamel-Picard iteration with contraction ratios.",
}


def print_color(text, color=Fore.WHITE, bold=False):
    """Helper function for colored output"""
    style = Style.BRIGHT if bold else Style.NORMAL
    print(f"{style}{color}{text}{Style.RESET_ALL}")


def _verdict(passed: bool, label: str) -> bool:
    if passed:
        print_color(f"  PASS  {label}", Fore.GREEN)
    else:
        print_color(f"  FAIL  {label}", Fore.RED, bold=True)
    return passed


def _note(passed: bool, label: str) -> None:
    """Report-only check: printed with the gates but never changes the exit code."""
    if passed:
        print_color(f"  PASS  {label}", Fore.GREEN)
    else:
        print_color(f"  WARN  {label}", Fore.YELLOW, bold=True)


def _exit_code(checks: List[bool]) -> int:
    return EXIT_OK if all(checks) else EXIT_ACCEPTANCE


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _run_count(config: ExperimentConfig, p) -> int:
    report_dir = generate_report_directory(config)
    checks = []

    enumerated = sum_two_squares_table(p.two_squares_max)
    sieved = divisor_sum_table(p.two_squares_max)
    mismatches = int(np.count_nonzero(enumerated != sieved))
    checks.append(_verdict(mismatches == 0, f"r_2(n) divisor formula = enumeration for n <= {p.two_squares_max}"))

    parity_failures = 0
    for delta, residue in PARITY_CLASSES.items():
        table = parity_class_table(p.parity_r_max, delta)
        parity_failures += int(table.sum() - table[:, residue].sum())
    checks.append(_verdict(parity_failures == 0, f"half-integer shifts keep a single residue class for r <= {p.parity_r_max}"))

    dyadic_failures, dyadic_max = 0, {}
    for m in range(2, p.dyadic_max_exponent + 1):
        q = 1 << m
        shifts = [(i / q, j / q) for i in range(q + 1) for j in range(q + 1) if i % 2 or j % 2]
        for delta in shifts:
            for r in dyadic_radii(p.r_max):
                report = dyadic_class_counts(Annulus(r=r, delta=delta))
                dyadic_failures += report.off_class + int(report.total > report.bound)
                dyadic_max[m] = max(dyadic_max.get(m, 0), report.total)
    if p.dyadic_max_exponent >= 2:
        checks.append(_verdict(dyadic_failures == 0, f"dyadic shifts up to 2^-{p.dyadic_max_exponent} keep one class mod 2^(m+1)"))

    deltas = delta_grid(p.delta_grid)
    radii = dyadic_radii(p.r_max)
    best = max_counts_over_deltas(radii, deltas)
    exponent = loglog_slope(radii, best)
    checks.append(_verdict(exponent < p.max_exponent, f"growth exponent {exponent:.4f} < {p.max_exponent}"))

    two_point = small_region_max_count([r for r in radii if r >= 64], seed=config.seed)
    checks.append(_verdict(two_point <= 2, f"small-region count {two_point} <= 2"))

    def rows():
        for delta in deltas:
            counts = annulus_counts(p.r_max, delta)
            for r in radii:
                yield (r, delta[0], delta[1], int(counts[r]))

    write_csv(report_dir, "counts", ["r", "delta_x", "delta_y", "count"], rows(), config)
    write_json(
        report_dir,
        "summary",
        {
            "growth_exponent": exponent,
            "max_counts": dict(zip(radii, best.tolist())),
            "two_squares_mismatches": mismatches,
            "parity_failures": parity_failures,
            "dyadic_failures": dyadic_failures,
            "dyadic_max_counts": dyadic_max,
            "small_region_max_count": two_point,
        },
        config,
    )
    return _exit_code(checks)


def _run_resonance(config: ExperimentConfig, p) -> int:
    report_dir = generate_report_directory(config)
    checks, reports, rows = [], [], []
    for alpha in p.alpha:
        report = resonance_identity_sweep(
            p.kmax, p.etamax, DispersionParams(alpha=alpha), p.eta_samples, p.taus, config.seed, keep_rows=True
        )
        reports.append(report.model_dump(exclude={"rows"}))
        rows.extend(report.rows)
        checks.append(_verdict(report.max_relative_deviation < p.tolerance, f"alpha={alpha:g}: identity deviation {report.max_relative_deviation:.2e}"))
        checks.append(_verdict(report.exact_r_term_failures == 0, f"alpha={alpha:g}: exact r-term"))
        checks.append(_verdict(report.same_sign_failures == 0, f"alpha={alpha:g}: r-term and mixed term share the sign of k k1 k2"))

    rng = np.random.default_rng(config.seed)
    data = random_spatial(p.factorization_K, p.factorization_M, rng)
    data = data * (1.0 / data.norm())
    worst = 0.0
    for alpha in p.alpha:
        disp = DispersionParams(alpha=alpha)
        for t in p.factorization_times:
            for k in range(-p.factorization_K, p.factorization_K + 1):
                if k != 0:
                    worst = max(worst, schrodinger_factorization_check(data, k, t, disp))
    checks.append(_verdict(worst < p.factorization_tolerance, f"Schroedinger factorization deviation {worst:.2e}"))

    write_csv(report_dir, "resonance", ["k1", "k2", "eta1_1", "eta1_2", "eta2_1", "eta2_2", "alpha", "r_term", "mixed_term"], rows, config)
    write_json(report_dir, "summary", {"sweeps": reports, "factorization_deviation": worst}, config)
    return _exit_code(checks)


def _run_norms(config: ExperimentConfig, p) -> int:
    report_dir = generate_report_directory(config)
    grid = GridSpec(K=p.K, M=p.M, J=p.J)
    params = NormParams(s=p.s, eps=p.eps, b=p.b, beta=p.beta, disp=DispersionParams(alpha=p.alpha), k_weight=p.k_weight)
    u = random_spectrum(grid, np.random.default_rng(config.seed))
    values = dict(norm_family(u, params, p.p_tau))
    parseval = abs(lebesgue_norm(u, 2) - u.norm()) / u.norm()
    passed = _verdict(parseval < 1e-10, f"Parseval: relative gap {parseval:.2e}")
    for name, value in values.items():
        print_color(f"  {name:>16}: {value:.6g}", Fore.CYAN)
    if p.dump_weights:
        write_csv(report_dir, "weights", ["k", "eta1", "eta2", "j", "weight"], weight_table(grid, params), config)
    write_json(report_dir, "summary", {"norms": values, "parseval_gap": parseval}, config)
    return _exit_code([passed])


def _case_from(p, name: Optional[str] = None) -> ProbeCase:
    return preset(name or p.case, falsification=p.falsification, **p.overrides)


def _run_probe(config: ExperimentConfig, p) -> int:
    case = _case_from(p)
    require_hypotheses(case)
    report_dir = generate_report_directory(config)
    checks = []
    payload: Dict[str, Any] = {"case": case.model_dump(), "description": CASE_DESCRIPTIONS[case.name]}

    if case.name == "kernel_sum":
        sweep = kernel_sum_sweep(p.kmax, p.radii, case.b, case.disp, case.eps, progress=True)
        write_csv(report_dir, "kernel_sum", ["R", "k", "k1", "tau", "ratio"], sweep.rows, config)
        checks.append(_verdict(sweep.max_cross_check_error <= p.kernel_tolerance, f"omega substitution agrees to {sweep.max_cross_check_error:.2e}"))
        checks.append(_verdict(all(math.isfinite(r) for r in sweep.max_ratio.values()), "kernel sum ratios finite"))
        if sweep.relative_change:
            last = list(sweep.relative_change)[-1]
            change = sweep.relative_change[last]
            if change >= p.stability_change:
                logger.warning(f"Kernel sum max ratio changed by {change:.1%} at R={last}")
            _note(change < p.stability_change, f"kernel sum max ratio change {change:.1%} at R={last} (report only)")
        payload["kernel_sum"] = sweep.model_dump(exclude={"rows"})
    elif case.name == "time_loc":
        grid = GridSpec(K=p.K, M=p.M, J=max(p.J, TIME_LOC_MIN_J))
        data = random_spatial(p.K, p.M, np.random.default_rng(config.seed))
        report = probe_time_localization(data * (1.0 / data.norm()), case.b, case.b_tilde, grid, case.disp, p.times)
        write_csv(report_dir, "time_loc", ["T", "ratio"], report.rows, config)
        if not case.falsification:
            checks.append(_verdict(report.slope is not None and report.slope >= -TIME_LOC_MAX_GROWTH, f"ratio growth exponent as T shrinks: {report.slope}"))
        payload["time_loc"] = report.model_dump()
    else:
        grid = GridSpec(K=p.K, M=p.M, J=p.J)
        report = extremizer_search(case, p.family, grid, p.budget, config.seed, config.threads)
        write_csv(
            report_dir, "probe", ["case", "N", "K", "M", "J", "lhs", "rhs", "ratio", "seed", "family"],
            [(report.case, p.K, report.K, report.M, report.J, report.lhs, report.rhs, report.ratio, report.seed, report.family)],
            config,
        )
        print_color(f"  {case.name}: best ratio {report.ratio} ({report.descriptor})", Fore.CYAN)
        payload["report"] = report.model_dump()
        rng = np.random.default_rng(config.seed)
        if case.name in ("bil", "bil_dual") and p.duality_triples:
            worst = max(
                duality_check(case, random_spectrum(grid, rng), random_spectrum(grid, rng), random_spectrum(grid, rng))
                for _ in range(p.duality_triples)
            )
            checks.append(_verdict(worst <= p.duality_tolerance, f"pairing identity agrees to {worst:.2e}"))
            payload["duality_error"] = worst
        if case.name in ("meps", "dx_half_meps"):
            chain = meps_chain_check(random_spectrum(grid, rng), random_spectrum(grid, rng), case.eps)
            checks.append(_verdict(chain.holds, "L^2 form bounded by sqrt(2K+1) times the sup-in-k form"))
            payload["chain"] = chain.model_dump()

    write_json(report_dir, "summary", payload, config)
    return _exit_code(checks)


def _run_sweep(config: ExperimentConfig, p) -> int:
    case = _case_from(p)
    require_hypotheses(case)
    report_dir = generate_report_directory(config)
    result = scaling_sweep(case, p.family, p.sizes, p.budget, config.seed, config.threads, progress=True)
    rows = [
        (r.case, n, r.K, r.M, r.J, r.lhs, r.rhs, r.ratio, r.seed, r.family)
        for n, r in zip(result.sizes, result.reports)
    ]
    header = ["case", "N", "K", "M", "J", "lhs", "rhs", "ratio", "seed", "family"]
    write_csv(report_dir, "sweep", header, rows, config)
    notes = [f"log-log slope: {result.slope}", f"falsification: {case.falsification}"]
    payload: Dict[str, Any] = {"case": case.model_dump(), "slope": result.slope, "sizes": result.sizes}
    if case.falsification:
        print_color(f"  falsification slope {result.slope} (report only)", Fore.YELLOW)
        baseline = scaling_sweep(preset(case.name), p.family, p.sizes, p.budget, config.seed, config.threads)
        gap = None if result.slope is None or baseline.slope is None else result.slope - baseline.slope
        _note(gap is not None and gap >= p.min_falsification_gap, f"slope gap to the {case.name} preset: {gap} (report only)")
        notes.append(f"preset slope: {baseline.slope}, gap: {gap}")
        payload.update(preset_slope=baseline.slope, slope_gap=gap)
    write_summary_markdown(report_dir, f"Scaling sweep: {case.name} / {p.family}", header, rows, config, notes)
    write_json(report_dir, "summary", payload, config)
    if case.falsification:
        return EXIT_OK
    return _exit_code([_verdict(result.slope is not None and result.slope < p.max_slope, f"slope {result.slope} < {p.max_slope}")])


def _run_solve(config: ExperimentConfig, p) -> int:
    report_dir = generate_report_directory(config)
    cfg = SolverConfig(
        disp=DispersionParams(alpha=p.alpha), K=p.K, M=p.M, dt=p.dt, t_end=p.t_end,
        scheme=p.scheme, nonlinear=not p.linear, save_every=p.save_every,
    )
    u0 = cosine_data(p.K, p.M, p.amplitude)
    trajectory = solve_cauchy(u0, cfg)
    write_csv(report_dir, "diagnostics", ["t", "l2", "drift", "energy", "max_mode"], trajectory.diagnostics_rows(), config)
    save_checkpoints(report_dir, trajectory.states, trajectory.times)
    drift = l2_drift(trajectory)
    checks = [_verdict(drift < p.max_drift, f"relative L2 drift {drift:.2e} < {p.max_drift}")]
    payload: Dict[str, Any] = {"l2_drift": drift, "saved_times": trajectory.times}

    if p.convergence_check:
        reference = cfg.model_copy(update={"K": p.ref_K, "M": p.ref_M, "dt": p.ref_dt})
        study_data = cosine_data(p.K, p.M, p.convergence_amplitude)
        study = time_step_convergence(study_data, cfg, [p.dt, p.dt / 2.0], reference)
        factor = study.reduction_factors[0]
        checks.append(_verdict(not study.flagged, f"convergence errors above roundoff: {study.errors[-1]:.2e}"))
        checks.append(_verdict(factor >= p.min_reduction, f"dt-halving error reduction {factor:.2f} >= {p.min_reduction}"))
        payload["convergence"] = study.model_dump()

    if p.lipschitz:
        direction = cosine_data(p.K, p.M, 1.0, modes=((2, 0, 1),))
        direction = direction * (1.0 / direction.norm())
        ratios = []
        for size in p.perturbations:
            report = lipschitz_probe(u0, u0 + direction * size, cfg, p.t_end)
            ratios.append(report.ratio)
        change = abs(ratios[0] - ratios[-1]) / ratios[-1]
        checks.append(_verdict(change <= p.max_lipschitz_change, f"Lipschitz ratio change {change:.1%}"))
        payload["lipschitz"] = {"perturbations": p.perturbations, "ratios": ratios, "change": change}

    write_json(report_dir, "summary", payload, config)
    return _exit_code(checks)


def _picard_rows(report) -> List[tuple]:
    rows = []
    for n, (d2, dx) in enumerate(zip(report.differences_l2, report.differences_x), start=1):
        r2 = report.ratios_l2[n - 2] if n > 1 else None
        rx = report.ratios_x[n - 2] if n > 1 else None
        rows.append((n, d2, dx, r2, rx))
    return rows


def _run_picard(config: ExperimentConfig, p) -> int:
    report_dir = generate_report_directory(config)
    cfg = SolverConfig(disp=DispersionParams(alpha=p.alpha), K=p.K, M=p.M, dt=p.dt, t_end=p.T)
    u0 = cosine_data(p.K, p.M, 1.0, modes=((1, 0, 0),))
    u0 = u0 * (p.amplitude / u0.norm())
    header = ["n", "difference_l2", "difference_x", "ratio_l2", "ratio_x"]
    try:
        report = duhamel_picard(u0, cfg, p.depth, p.T).report
    except PicardDivergenceError as e:
        write_csv(report_dir, "picard", header, _picard_rows(e.report), config)
        write_json(report_dir, "summary", {"report": e.report, "diverged": True}, config)
        raise
    write_csv(report_dir, "picard", header, _picard_rows(report), config)
    if not report.strictly_decreasing:
        logger.warning(f"Picard ratios are not strictly decreasing: {report.ratios_l2}")
    checks = [
        _verdict(report.contracting, "all Picard ratios < 1"),
        _verdict(report.stepper_difference <= p.tolerance, f"Picard vs time stepper {report.stepper_difference:.2e}"),
    ]
    _note(report.strictly_decreasing, "Picard ratios strictly decreasing (report only)")
    write_json(report_dir, "summary", {"report": report, "strictly_decreasing": report.strictly_decreasing}, config)
    return _exit_code(checks)


RUNNERS: Dict[str, Callable[[ExperimentConfig, Any], int]] = {
    "count": _run_count,
    "resonance": _run_resonance,
    "norms": _run_norms,
    "probe": _run_probe,
    "sweep": _run_sweep,
    "solve": _run_solve,
    "picard": _run_picard,
}


def _report_validation_error(error: ValidationError) -> None:
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "parameters"
        print_color(f"Error: parameter '{key}': {item['msg']}", Fore.RED, bold=True)


def run(config: ExperimentConfig) -> int:
    """
    Run one experiment and write its reports.

    Args:
        config: The experiment configuration

    Returns:
        int: 0 on success, 1 on a usage or configuration error, 2 on an acceptance violation
    """
    start_time = time.time()
    try:
        params = config.resolved_parameters()
    except ValidationError as e:
        _report_validation_error(e)
        return EXIT_USAGE
    if config.command in ("probe", "sweep") and params.case not in CASE_DESCRIPTIONS:
        print_color(f"Error: parameter 'case': unknown probe case '{params.case}'", Fore.RED, bold=True)
        return EXIT_USAGE

    print_color(f"KP Torus Lab: {config.command}", bold=True)
    print_color(f"Config hash: {config.config_hash()}", Fore.CYAN)
    logger.info(f"Running {config.command} with {params.model_dump()}")
    try:
        code = RUNNERS[config.command](config, params)
    except ValidationError as e:
        _report_validation_error(e)
        return EXIT_USAGE
    except (HypothesisViolation, StabilityError) as e:
        print_color(f"Error: {e}", Fore.RED, bold=True)
        return EXIT_USAGE
    except (SolverInstabilityError, PicardDivergenceError) as e:
        print_color(f"Failed: {e}", Fore.RED, bold=True)
        return EXIT_ACCEPTANCE

    duration = time.time() - start_time
    color = Fore.GREEN if code == EXIT_OK else Fore.RED
    print_color(f"\nFinished with exit code {code} in {duration:.2f} seconds", color, bold=True)
    logger.info(f"Total execution time: {duration:.2f} seconds")
    return code


def validate(config: ExperimentConfig) -> List[str]:
    """
    Diagnostics for a configuration without running it.

    Parameter errors are listed by key; probe and sweep configurations are
    also checked against the hypotheses of their estimate.

    Returns:
        List[str]: Empty when the configuration is valid
    """
    try:
        params = config.resolved_parameters()
    except ValidationError as e:
        return [f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}" for item in e.errors()]
    if config.command not in ("probe", "sweep"):
        return []
    if params.case not in CASE_DESCRIPTIONS:
        return [f"case: unknown probe case '{params.case}'"]
    try:
        return check_hypotheses(preset(params.case, **params.overrides))
    except ValidationError as e:
        return [f"overrides.{'.'.join(str(part) for part in item['loc'])}: {item['msg']}" for item in e.errors()]


# ---------------------------------------------------------------------------
# Click front end
# ---------------------------------------------------------------------------


def _split_override(item: str) -> tuple:
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise click.BadParameter(f"expected KEY=VALUE, got '{item}'", param_hint="--override")
    return key.strip(), coerce_value(value)


def _options_for(command: str) -> List[click.Option]:
    """One option per field of the command's parameter model; all default to None."""
    options = []
    for name, field in COMMAND_PARAMS[command].model_fields.items():
        flag = "--" + name.replace("_", "-")
        annotation = field.annotation
        help_text = field.description or f"default: {field.default}"
        if name == "overrides":
            options.append(click.Option(["--override", "overrides"], multiple=True, metavar="KEY=VALUE", help="Override a probe case exponent"))
        elif typing.get_origin(annotation) is Literal:
            options.append(click.Option([flag, name], type=click.Choice(typing.get_args(annotation)), default=None, help=help_text))
        elif annotation is bool:
            options.append(click.Option([flag, name], type=click.BOOL, default=None, help=help_text))
        elif annotation in (int, float):
            options.append(click.Option([flag, name], type=annotation, default=None, help=help_text))
        else:
            options.append(click.Option([flag, name], type=str, default=None, help=help_text))
    return options


def _collect_flags(flags: Dict[str, Any]) -> Dict[str, Any]:
    raw: Dict[str, Any] = {}
    for name, value in flags.items():
        if value is None or value == ():
            continue
        if name == "overrides":
            raw["overrides"] = dict(_split_override(item) for item in value)
        elif isinstance(value, str):
            raw[name] = coerce_value(value)
        else:
            raw[name] = value
    return raw


def _build_config(options: Dict[str, Any], command: Optional[str], flag_params: Dict[str, Any]) -> ExperimentConfig:
    """
    Merge the config file (if any), global options and command flags.

    Raises:
        ValueError: On a malformed file or a command mismatch
        FileNotFoundError: If the config file does not exist
        pydantic.ValidationError: On invalid run settings
    """
    file_values: Dict[str, Any] = {}
    if options.get("config"):
        file_values = parse_config_file(options["config"])
        if command is not None and file_values["command"] != command:
            raise ValueError(f"config file is for '{file_values['command']}', not '{command}'")
    command = command or file_values.get("command")
    if command is None:
        raise ValueError("no command given and no --config file")

    parameters = dict(file_values.get("parameters", {}))
    flag_params = normalise_parameters(command, flag_params)
    overrides = {**parameters.get("overrides", {}), **flag_params.pop("overrides", {})}
    parameters.update(flag_params)
    if overrides:
        parameters["overrides"] = overrides

    kwargs: Dict[str, Any] = {"command": command, "parameters": parameters}
    for key in ("seed", "threads", "output"):
        value = options.get(key)
        if value is None:
            value = file_values.get(key)
        if value is not None:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


def _load(ctx: click.Context, command: Optional[str], flag_params: Dict[str, Any]) -> Optional[ExperimentConfig]:
    try:
        return _build_config(ctx.obj, command, flag_params)
    except ValidationError as e:
        _report_validation_error(e)
    except (OSError, ValueError) as e:
        print_color(f"Error: {e}", Fore.RED, bold=True)
    return None


def _make_command(command: str) -> click.Command:
    @click.pass_context
    def callback(ctx, **flags):
        config = _load(ctx, command, _collect_flags(flags))
        ctx.exit(EXIT_USAGE if config is None else run(config))

    return click.Command(command, params=_options_for(command), callback=callback, help=COMMAND_HELP[command])


@click.group()
@click.option("--config", "-c", "config", default=None, type=click.Path(dir_okay=False), help="YAML experiment file")
@click.option("--seed", type=int, default=None, help="Random seed (default: KPLAB_SEED or 0)")
@click.option("--threads", type=int, default=None, help="Worker threads; 1 guarantees bit-reproducible output")
@click.option("--output", "-o", default=None, help="Base directory for reports (default: KPLAB_OUTPUT_DIR or reports)")
@click.option("--log-level", "-l", default=None,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]),
              help="Set the logging level")
@click.pass_context
def cli(ctx, config, seed, threads, output, log_level):
    """
    KP Torus Lab: numerical experiments for the KP-II equation on the torus.
    """
    setup_logging(log_level)
    logger.debug(f"Environment defaults: {get_config()}")
    ctx.obj = {"config": config, "seed": seed, "threads": threads, "output": output}


for _command in COMMAND_PARAMS:
    cli.add_command(_make_command(_command))


@cli.command("validate")
@click.option("--case", default=None, help="Probe case to check (default: the config file's case, or bil)")
@click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a probe case exponent")
@click.pass_context
def validate_command(ctx, case, overrides):
    """
    Check a configuration and the hypotheses of its probe case without running it.
    """
    flags = _collect_flags({"case": case, "overrides": overrides})
    command = None if ctx.obj.get("config") else "probe"
    config = _load(ctx, command, flags)
    if config is None:
        ctx.exit(EXIT_USAGE)
    diagnostics = validate(config)
    if not diagnostics:
        print_color("Configuration is valid", Fore.GREEN, bold=True)
    for line in diagnostics:
        print_color(f"  {line}", Fore.YELLOW)
    ctx.exit(EXIT_OK)


if __name__ == "__main__":
    cli()
