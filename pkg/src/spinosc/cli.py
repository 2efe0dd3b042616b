"""Command-line interface.

Four subcommands: `simulate` runs one integration and optionally writes the
trajectory CSV, `validate` cross-checks every available backend against the
reference, `bench` runs the timing protocol, and `scaling` measures how
derivative cost grows with reservoir size.

Settings resolve in precedence order: command-line flags beat config-file
entries beat package defaults. Config files are plain `key = value` lines
with `#` comments; unknown keys are rejected with their line number.

Exit codes: 0 success, 2 usage or configuration error, 3 missing capability
(unavailable backend), 4 validation mismatch, 5 integration divergence.
"""

from __future__ import annotations

import argparse
import sys

from .backends import available_backend_ids, list_backends
from .bench import (
    DEFAULT_DRIFT_BUDGET,
    drift_budget_for,
    DEFAULT_REPETITIONS,
    DEFAULT_TOLERANCE,
    emit_csv,
    emit_markdown,
    fit_scaling_exponent,
    run_benchmark,
    speedup_factors,
    time_derivative_eval,
)
from .errors import (
    BackendUnavailableError,
    BenchProtocolError,
    ConfigError,
    DriftBudgetError,
    IntegrationDivergedError,
    ParameterError,
    SpinoscError,
    TrajectoryMismatchError,
)
from .integrator import RunConfig, compare_trajectories, integrate, write_trajectory_csv
from .params import PhysicalParams
from .topology import PHI0_DEFAULT, build_topology

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPABILITY = 3
EXIT_VALIDATION = 4
EXIT_DIVERGENCE = 5

# Run-shape defaults for the CLI; physics defaults live on PhysicalParams.
_DEFAULTS = {
    "n": 10,
    "steps": 1000,
    "dt": 1e-11,
    "seed": 0,
    "phi0": PHI0_DEFAULT,
    "backend": "reference",
    "record_stride": 1,
    "n_in": 1,
}

# Accepted config keys and their value parsers.
_CONFIG_TYPES = {
    "n": int, "steps": int, "seed": int, "record_stride": int, "n_in": int,
    "workers": int, "gpu_device": int,
    "dt": float, "phi0": float,
    "backend": str, "output": str,
    "gamma": float, "alpha": float, "m_sat": float, "h_k": float,
    "h_appl": float, "eta": float, "lambda_stt": float, "current": float,
    "volume": float, "charge_e": float, "hbar": float,
    "p_x": float, "p_y": float, "p_z": float,
    "a_cp": float, "a_in": float,
}

_PHYS_FIELDS = ("gamma", "alpha", "m_sat", "h_k", "h_appl", "eta",
                "lambda_stt", "current", "volume", "charge_e", "hbar",
                "a_cp", "a_in")

_RUN_KEYS = ("n", "steps", "dt", "seed", "phi0", "backend", "record_stride",
             "workers", "gpu_device", "output")


def parse_config(path) -> dict:
    """Read a `key = value` config file into a typed dict.

    `#` starts a comment, blank lines are skipped. Unknown keys and
    unparseable values raise `ConfigError` carrying the line number.
    """
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("expected 'key = value'", line=lineno)
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in _CONFIG_TYPES:
                raise ConfigError(f"unknown key {key!r}", line=lineno)
            try:
                values[key] = _CONFIG_TYPES[key](text)
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {text!r}",
                                  line=lineno) from None
    return values


def _resolve_settings(args) -> tuple[dict, set]:
    """Defaults, then config file, then explicit flags.

    Also returns the set of keys the user actually set (either way), for
    commands whose fallback defaults differ from the run-shape defaults.
    """
    merged = dict(_DEFAULTS)
    explicit: set = set()
    config_path = getattr(args, "config", None)
    if config_path:
        file_values = parse_config(config_path)
        merged.update(file_values)
        explicit.update(file_values)
    for key in _CONFIG_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
            explicit.add(key)
    return merged, explicit


def _params_from(settings: dict) -> PhysicalParams:
    overrides = {name: settings[name] for name in _PHYS_FIELDS if name in settings}
    if any(k in settings for k in ("p_x", "p_y", "p_z")):
        base = PhysicalParams().p_vec
        overrides["p_vec"] = (
            settings.get("p_x", base[0]),
            settings.get("p_y", base[1]),
            settings.get("p_z", base[2]),
        )
    params = PhysicalParams()
    if overrides:
        params = params.with_overrides(**overrides)
    return params


def _run_config(settings: dict, backend: str | None = None) -> RunConfig:
    return RunConfig(
        n=settings["n"], steps=settings["steps"], dt=settings["dt"],
        seed=settings["seed"], phi0=settings["phi0"],
        backend=backend if backend is not None else settings["backend"],
        record_stride=settings["record_stride"],
        workers=settings.get("workers"),
        gpu_device=settings.get("gpu_device"),
    )


def _parse_size_list(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ParameterError(f"bad size list {text!r}; expected e.g. 500,1000,2000") from None
    if not sizes:
        raise ParameterError("size list is empty")
    return sizes


def _cmd_simulate(args) -> int:
    settings, _ = _resolve_settings(args)
    params = _params_from(settings)
    config = _run_config(settings)
    topology = build_topology(config.n, n_in=settings["n_in"], seed=config.seed)
    trajectory = integrate(topology, params, config)
    print(f"backend={config.backend} n={config.n} steps={config.steps} "
          f"dt={config.dt:g} seed={config.seed}")
    print(f"stepping took {trajectory.elapsed_seconds:.3f}s; "
          f"max unit-norm drift {trajectory.max_norm_drift:.3e}")
    mx, my, mz = trajectory.final_state[0]
    print(f"final m[0] = ({mx:.9f}, {my:.9f}, {mz:.9f})")
    output = settings.get("output")
    if output:
        write_trajectory_csv(output, trajectory)
        print(f"wrote trajectory to {output}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    settings, _ = _resolve_settings(args)
    params = _params_from(settings)
    for desc in list_backends():
        status = "available" if desc.available else f"unavailable (needs {desc.requires})"
        print(f"  {desc.backend_id}: {desc.kind}, {status}")
    available = available_backend_ids()
    if len(available) < 2:
        print(f"error: validation needs at least 2 available backends, "
              f"have {available}", file=sys.stderr)
        return EXIT_CAPABILITY
    baseline = "reference"
    topology = build_topology(settings["n"], n_in=settings["n_in"],
                              seed=settings["seed"])
    reference = integrate(topology, params, _run_config(settings, backend=baseline))
    budget = None
    if args.drift_budget is not None:
        budget = drift_budget_for(settings["steps"], args.drift_budget)
    print(f"validating against {baseline!r}: n={settings['n']} "
          f"steps={settings['steps']} dt={settings['dt']:g}")

    def drift_line(bid: str, drift: float) -> bool:
        if budget is None:
            print(f"{bid}: max unit-norm drift {drift:.3e}")
            return True
        ok = drift <= budget
        print(f"{bid}: max unit-norm drift {drift:.3e} "
              f"(budget {budget:.1e}) -> {'PASS' if ok else 'FAIL'}")
        return ok

    all_ok = drift_line(baseline, reference.max_norm_drift)
    worst: tuple[float, str] | None = None
    for bid in available:
        if bid == baseline:
            continue
        trajectory = integrate(topology, params, _run_config(settings, backend=bid))
        deviation = compare_trajectories(reference, trajectory)
        if args.tolerance is not None:
            tolerance = args.tolerance
        else:
            # compiled CPU paths share the pinned order: bit equality;
            # the gpu path is only held to a tolerance
            tolerance = 1e-10 if bid == "gpu" else 0.0
        ok = deviation <= tolerance
        if not ok and (worst is None or deviation > worst[0]):
            worst = (deviation, bid)
        print(f"{baseline} vs {bid}: max deviation {deviation:.3e} "
              f"(tolerance {tolerance:g}) -> {'PASS' if ok else 'FAIL'}")
        all_ok = drift_line(bid, trajectory.max_norm_drift) and all_ok
        all_ok = all_ok and ok
    if not all_ok:
        if worst is not None:
            print(f"validation FAILED: worst pair {baseline} vs {worst[1]} "
                  f"(deviation {worst[0]:.3e})", file=sys.stderr)
        else:
            print("validation FAILED: drift budget exceeded", file=sys.stderr)
        return EXIT_VALIDATION
    print("validation passed")
    return EXIT_OK


def _cmd_bench(args) -> int:
    settings, explicit = _resolve_settings(args)
    params = _params_from(settings)
    sizes = _parse_size_list(args.n_list) if args.n_list else None
    backend_ids = None
    if args.backends:
        backend_ids = [b.strip() for b in args.backends.split(",") if b.strip()]
    report = run_benchmark(
        backend_ids=backend_ids, sizes=sizes,
        steps=settings["steps"] if "steps" in explicit else None,
        dt=settings["dt"], seed=settings["seed"], full=args.full,
        repetitions=args.repetitions, tolerance=args.tolerance,
        drift_budget=args.drift_budget, baseline=args.baseline,
        params=params, progress=lambda line: print(line),
    )
    print()
    print(f"hardware: {report.hardware}  (emitted {report.emitted})")
    print()
    print(emit_markdown(report), end="")
    print()
    print(f"speedup vs {report.baseline!r} (displayed to one decimal):")
    for cell in speedup_factors(report):
        if cell.backend == report.baseline:
            continue
        marker = "  <- best" if cell.best else ""
        print(f"  {cell.backend} n={cell.n}: {cell.display:.1f}x{marker}")
    output = settings.get("output")
    if output:
        emit_csv(report, output)
        print(f"wrote timing CSV to {output}")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    settings, _ = _resolve_settings(args)
    if args.self_test:
        # synthetic quadratic-cost records: exercises the fit path only
        sizes = (500, 1000, 2000, 4000, 8000)
        seconds = [1e-9 * n * n for n in sizes]
        slope = fit_scaling_exponent(sizes, seconds)
        print(f"self-test slope: {slope:.3f}")
        return EXIT_OK
    params = _params_from(settings)
    sizes = _parse_size_list(args.n_list) if args.n_list else (500, 1000, 2000, 4000, 8000)
    seconds = []
    for n in sizes:
        topology = build_topology(n, n_in=settings["n_in"], seed=settings["seed"])
        per_eval = time_derivative_eval(topology, params,
                                        backend_id=settings["backend"],
                                        evals=args.evals,
                                        workers=settings.get("workers"))
        seconds.append(per_eval)
        print(f"n={n}: {per_eval * 1e3:.3f} ms/eval")
    slope = fit_scaling_exponent(sizes, seconds)
    print(f"fitted scaling exponent: {slope:.3f}")
    output = settings.get("output")
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write("n,seconds\n")
            for n, sec in zip(sizes, seconds):
                fh.write(f"{n},{sec:.17g}\n")
        print(f"wrote scaling CSV to {output}")
    return EXIT_OK


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, help="number of oscillators")
    parser.add_argument("--steps", type=int, help="integration steps")
    parser.add_argument("--dt", type=float, help="time step in seconds")
    parser.add_argument("--seed", type=int, help="topology seed")
    parser.add_argument("--phi0", type=float, help="initial tilt in radians")
    parser.add_argument("--backend", help="derivative backend id")
    parser.add_argument("--record-stride", type=int, dest="record_stride",
                        help="record every k-th step (final always kept)")
    parser.add_argument("--workers", type=int,
                        help="thread count for the parallel backend")
    parser.add_argument("--gpu-device", type=int, dest="gpu_device",
                        help="CUDA device index for the gpu backend")
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--output", help="output file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinosc",
        description="Coupled spin-torque oscillator reservoir simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one integration")
    _add_common_flags(p_sim)

    p_val = sub.add_parser("validate",
                           help="cross-check available backends against the reference")
    _add_common_flags(p_val)
    p_val.add_argument("--tolerance", type=float,
                       help="override the per-backend deviation tolerance")
    p_val.add_argument("--drift-budget", type=float, dest="drift_budget",
                       help="enforce a unit-norm drift budget per 1e4 steps")

    p_bench = sub.add_parser("bench", help="run the timing protocol")
    _add_common_flags(p_bench)
    p_bench.add_argument("--full", action="store_true",
                         help="publication-scale grid and step count")
    p_bench.add_argument("--baseline", default="reference",
                         help="backend the speedups are normalized against")
    p_bench.add_argument("--repetitions", type=int, default=DEFAULT_REPETITIONS,
                         help="timed runs per cell")
    p_bench.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE,
                         help="cross-backend trajectory tolerance")
    p_bench.add_argument("--drift-budget", type=float, dest="drift_budget",
                         default=DEFAULT_DRIFT_BUDGET,
                         help="admissible unit-norm drift per 1e4 steps")
    p_bench.add_argument("--n-list", dest="n_list",
                         help="comma-separated reservoir sizes")
    p_bench.add_argument("--backends",
                         help="comma-separated backend ids (default: all available)")

    p_scale = sub.add_parser("scaling",
                             help="derivative cost versus reservoir size")
    _add_common_flags(p_scale)
    p_scale.add_argument("--n-list", dest="n_list",
                         help="comma-separated reservoir sizes")
    p_scale.add_argument("--evals", type=int, default=5,
                         help="timed derivative evaluations per size")
    p_scale.add_argument("--self-test", action="store_true", dest="self_test",
                         help="fit synthetic quadratic records instead of timing")

    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "bench": _cmd_bench,
    "scaling": _cmd_scaling,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except IntegrationDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (DriftBudgetError, TrajectoryMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ParameterError, BenchProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpinoscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
