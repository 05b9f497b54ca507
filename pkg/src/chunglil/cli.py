"""Command-line front end for chunglil experiments."""

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from . import __version__
from .analytic import (
    gamma_fn,
    limit_constant,
    small_ball_asymptotic,
    small_ball_bounds,
    small_ball_sup,
    theorem1_constant,
    theorem2_constant,
)
from .distributions import DISTRIBUTION_NAMES, build_distribution
from .errors import ChungLilError, ParameterError
from .models import EpsilonSchedule, PsiSpec, RunConfig, Theorem, WeightParams
from .montecarlo import condition_profile, estimate_small_dev, rate_regression, truncation_stats
from .record_formatter import RecordFormatter, row
from .rngcore import parse_seed
from .weights import (
    brownian_series_t1,
    brownian_series_t2,
    classify_chung_family,
    classify_psi_family,
    increment_profile,
    j_ab_partial,
    j_chung_partial,
    kernel_sum_direct,
    kernel_sum_integral,
    scaled_limit_check,
    theorem2_kernel_limit,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DEFAULT_SEED = 42
CONDITION_ATOMS_KMAX = "inf"

# Built-in defaults, applied after the config file and explicit flags.
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "smallball": {"x": 1.0, "tol": 1e-12},
    "constants": {"theorem": 1, "a": 0.0, "b": 0.0, "tau": 0.0},
    "series": {"theorem": 1, "a": 0.0, "b": 0.0, "eps": 0.5, "tau": 0.0, "nmax": 10_000_000,
               "mode": "integral", "q": 1.0},
    "mc": {"dist": "rademacher", "n": 10_000, "eps": 1.0, "tau": 0.0, "reps": 10_000},
    "sweep": {"dist": "rademacher", "eps": 1.0, "ngrid": "1e3,1e4,1e5,1e6", "reps": 10_000},
    "truncate": {"dist": "rademacher", "n": 100, "p": 0.25, "reps": 100},
    "integral-test": {"family": "c-loglog", "c": 0.9, "a": 0.0, "b": 0.0, "nmax": 1_000_000},
    "condition": {"dist": "normal"},
}
SEEDED_COMMANDS = ("mc", "sweep", "truncate")
DIST_PARAMS = ("w", "v", "p_atom", "c", "kmax")

formatter = RecordFormatter()


# Parameter parsing helpers

def parse_count(text: Any) -> int:
    """Positive integer from '10000', '1e4' or '10_000'."""
    try:
        value = float(str(text).replace("_", ""))
    except ValueError:
        raise ParameterError(f"expected a count, got {text!r}")
    if value != int(value) or value < 1:
        raise ParameterError(f"expected a positive integer count, got {text!r}")
    return int(value)


def parse_grid(text: Any, parse: Callable[[Any], Any] = float) -> List[Any]:
    """Comma-separated list, or an inclusive integer range 'lo..hi'."""
    if isinstance(text, (list, tuple)):
        return [parse(item) for item in text]
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return [parse(k) for k in range(int(lo), int(hi) + 1)]
    try:
        return [parse(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ParameterError(f"could not parse grid {text!r}")


def parse_kmax(text: str) -> Any:
    """Atom count as a positive integer or 'inf'."""
    if str(text).strip().lower() == "inf":
        return "inf"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or inf, got {text!r}")


def parse_table(text: str) -> List[tuple]:
    """Tabulated psi as 'n:psi,n:psi,...'."""
    pairs = []
    for item in str(text).split(","):
        try:
            n, value = item.split(":")
            pairs.append((float(n), float(value)))
        except ValueError:
            raise ParameterError(f"psi table entries must look like n:psi, got {item!r}")
    return pairs


def _dist_from(params: Dict[str, Any]):
    return build_distribution(
        params["dist"],
        **{"w": params.get("w"), "v": params.get("v"), "p": params.get("p_atom"),
           "c": params.get("c"), "k_max": params.get("kmax")},
    )


# Commands. Each maps resolved parameters (and seed/workers) to a record.

def cmd_smallball(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    x = float(params["x"])
    result = small_ball_sup(x, float(params["tol"]))
    rows = formatter.smallball_rows(result, small_ball_asymptotic(x), small_ball_bounds(x))
    return formatter.record("smallball", params, None, rows)


def cmd_constants(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    theorem = Theorem.T1 if int(params["theorem"]) == 1 else Theorem.T2
    constant = limit_constant(theorem, float(params["a"]), float(params["b"]), float(params["tau"]))
    return formatter.record("constants", params, None, formatter.constant_rows(constant))


def cmd_series(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    a, b, tau = float(params["a"]), float(params["b"]), float(params["tau"])
    eps_grid = parse_grid(params["eps"])
    mode = params["mode"]
    rows = []
    meta: Dict[str, Any] = {}
    if int(params["theorem"]) == 2:
        q = float(params["q"])
        target = gamma_fn(b + 1.0) * q ** (-(b + 1.0))
        for eps in eps_grid:
            rows.append(row(f"kernel_limit@eps={eps!r}", theorem2_kernel_limit(q, b, eps), reference=target))
        series_rows = [brownian_series_t2(b, eps) for eps in eps_grid]
        rows.extend(formatter.scaled_rows(series_rows, theorem2_constant(b), label="brownian_series"))
        return formatter.record("series", params, None, rows, meta)

    weights = WeightParams(a, b)
    target = theorem1_constant(a, b, tau)
    if mode == "direct":
        for eps in eps_grid:
            result = kernel_sum_direct(weights, eps, parse_count(params["nmax"]))
            integral = kernel_sum_integral(weights, eps)
            rows.extend(formatter.kernel_rows(result, integral, target))
    elif mode == "integral":
        for eps in eps_grid:
            rows.append(row(f"integral@eps={eps!r}", kernel_sum_integral(weights, eps)))
        rows.extend(formatter.scaled_rows(scaled_limit_check(weights, tau, eps_grid), target))
    elif mode == "brownian":
        rows.extend(formatter.scaled_rows([brownian_series_t1(weights, eps, tau) for eps in eps_grid], target,
                                          label="brownian_series"))
    else:
        raise ParameterError(f"mode must be direct, integral or brownian, got {mode!r}")
    meta["critical_eps"] = weights.critical_eps
    return formatter.record("series", params, None, rows, meta)


def cmd_mc(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    dist = _dist_from(params)
    estimate = estimate_small_dev(
        dist, parse_count(params["n"]), float(params["eps"]), EpsilonSchedule(float(params["tau"])),
        parse_count(params["reps"]), seed, workers=workers,
    )
    meta = {"dist": estimate.dist, "note": "reference is the Brownian small-ball value; "
                                           "model_error_budget is an engineering tolerance"}
    return formatter.record("mc", params, seed, formatter.mc_rows(estimate), meta)


def cmd_sweep(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    dist = _dist_from(params)
    regression = rate_regression(
        dist, float(params["eps"]), parse_grid(params["ngrid"], parse_count), parse_count(params["reps"]), seed,
        workers=workers,
    )
    return formatter.record("sweep", params, seed, formatter.regression_rows(regression), {"dist": regression.dist})


def cmd_truncate(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    dist = _dist_from(params)
    stats = truncation_stats(dist, parse_count(params["n"]), float(params["p"]), parse_count(params["reps"]), seed,
                             workers=workers)
    return formatter.record("truncate", params, seed, formatter.truncation_rows(stats), {"dist": dist.summary()})


def _increment_grid(n_max: int) -> List[int]:
    return [10 ** k for k in range(3, int(math.log10(n_max) + 1e-9) + 1)]


def cmd_integral_test(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    weights = WeightParams(float(params["a"]), float(params["b"]))
    n_max = parse_count(params["nmax"])
    meta: Dict[str, Any] = {}
    rows = []
    if params["family"] == "c-loglog":
        c = float(params["c"])
        psi = PsiSpec.c_over_sqrt_loglog(c)
        verdict_ab = classify_psi_family(c, weights)
        verdict_j = classify_chung_family(c)
        rows.append(row("verdict.J_ab", verdict_ab.value, reference=weights.critical_eps, deviation=c - weights.critical_eps))
        rows.append(row("verdict.J", verdict_j.value, reference=1.0, deviation=c - 1.0))
        if c == weights.critical_eps:
            meta["note"] = "boundary case c = 1/sqrt(1+a): terms are (log log n)^b / (n log n), which diverge for b > -1"
            logger.warning(meta["note"])
    elif params["family"] == "tabulated":
        if not params.get("table"):
            raise ParameterError("the tabulated family needs --table n:psi,n:psi,...")
        psi = PsiSpec.tabulated(parse_table(params["table"]))
        meta["note"] = "tabulated psi: partial sums and increments only, no verdict"
    else:
        raise ParameterError(f"family must be c-loglog or tabulated, got {params['family']!r}")

    j_ab = j_ab_partial(psi, weights, n_max)
    j = j_chung_partial(psi, n_max)
    rows.append(row("J_ab.partial_sum", j_ab.partial_sum, stderr=None, reference=None))
    rows.append(row("J_ab.tail_bound", j_ab.tail_bound))
    rows.append(row("J.partial_sum", j.partial_sum))
    rows.append(row("J.tail_bound", j.tail_bound))
    grid = _increment_grid(n_max)
    if len(grid) >= 3:
        rows.extend(formatter.profile_rows(increment_profile(psi, weights, grid)))
    return formatter.record("integral-test", params, None, rows, meta)


def cmd_condition(params: Dict[str, Any], seed: Optional[int], workers: int) -> Dict[str, Any]:
    if params["dist"] == "atoms" and params.get("kmax") is None:
        # the profile never samples, so the full atom ladder is available
        params = {**params, "kmax": CONDITION_ATOMS_KMAX}
    dist = _dist_from(params)
    if params.get("kgrid") is not None:
        log_t = [math.exp(k) for k in parse_grid(params["kgrid"], int)]
    elif params.get("logtgrid") is not None:
        log_t = parse_grid(params["logtgrid"])
    elif params.get("tgrid") is not None:
        log_t = [math.log(t) for t in parse_grid(params["tgrid"])]
    else:
        raise ParameterError("condition needs one of --tgrid, --logtgrid or --kgrid")
    rows = formatter.condition_rows(condition_profile(dist, log_t))
    return formatter.record("condition", params, None, rows, {"dist": dist.summary()})


COMMANDS: Dict[str, Callable[[Dict[str, Any], Optional[int], int], Dict[str, Any]]] = {
    "smallball": cmd_smallball,
    "constants": cmd_constants,
    "series": cmd_series,
    "mc": cmd_mc,
    "sweep": cmd_sweep,
    "truncate": cmd_truncate,
    "integral-test": cmd_integral_test,
    "condition": cmd_condition,
}


def run_command(config: RunConfig) -> Dict[str, Any]:
    """Execute a resolved configuration and return its record."""
    try:
        handler = COMMANDS[config.command]
    except KeyError:
        raise ParameterError(f"unknown command {config.command!r}")
    logger.info(f"running {config.command} with {config.params} (seed={config.seed}, threads={config.threads})")
    return handler(config.params, config.seed, config.threads)


def config_from_record(record: Dict[str, Any], threads: int = 1) -> RunConfig:
    """RunConfig that re-executes the command embedded in a record."""
    if record.get("command") not in COMMANDS:
        raise ParameterError(f"record does not name a replayable command: {record.get('command')!r}")
    return RunConfig(record["command"], dict(record["params"]), threads=threads, seed=record.get("seed"))


def replay_record(record: Dict[str, Any], threads: int = 1) -> List[str]:
    """Re-run a record; returns the list of numeric differences (empty when reproduced)."""
    if record.get("version") != __version__:
        logger.warning(f"record was produced by version {record.get('version')}, replaying with {__version__}")
    fresh = run_command(config_from_record(record, threads))
    return formatter.numeric_differences(record, fresh)


# Argument parsing

def _add_dist_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--dist', choices=DISTRIBUTION_NAMES, help='Step distribution')
    parser.add_argument('--w', type=float, help='Half-width of the centered uniform law')
    parser.add_argument('--v', type=float, help='Large atom of the two-point law')
    parser.add_argument('--p-atom', dest='p_atom', type=float, help='Probability of the two-point atom v')
    parser.add_argument('--c', type=float, help='Mass scale of the doubly-exponential atoms')
    parser.add_argument('--kmax', type=parse_kmax, help='Number of doubly-exponential atoms, or inf')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=['csv', 'json'], help='Output format (default csv)')
    common.add_argument('--output', help='Write the record to this file instead of stdout')
    common.add_argument('--config', help='JSON file with option values; flags take precedence')
    common.add_argument('--log-level', dest='log_level', help='Logging level (default WARNING)')
    common.add_argument('--store', action='store_true', default=None, help='Persist the record in the run ledger')
    common.add_argument('--threads', type=int, help='Worker processes (default $CHUNGLIL_THREADS or 1)')
    common.add_argument('--seed', help='64-bit seed, decimal or 0x-hex')

    parser = argparse.ArgumentParser(prog='chunglil', description="Numerical asymptotics of Chung's law of the iterated logarithm")
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    smallball = subparsers.add_parser('smallball', parents=[common], help='Brownian small-ball probability')
    smallball.add_argument('--x', type=float, help='Radius x > 0')
    smallball.add_argument('--tol', type=float, help='Absolute tolerance')

    constants = subparsers.add_parser('constants', parents=[common], help='Weighted-series limit constants')
    constants.add_argument('--theorem', type=int, choices=[1, 2])
    constants.add_argument('--a', type=float)
    constants.add_argument('--b', type=float)
    constants.add_argument('--tau', type=float)

    series = subparsers.add_parser('series', parents=[common], help='Weighted kernel series and scaled limits')
    series.add_argument('--theorem', type=int, choices=[1, 2])
    series.add_argument('--a', type=float)
    series.add_argument('--b', type=float)
    series.add_argument('--eps', help='eps or comma-separated eps grid')
    series.add_argument('--tau', type=float)
    series.add_argument('--q', type=float, help='Rate q of the second-theorem kernel limit')
    series.add_argument('--nmax', help='Last term of direct summation')
    series.add_argument('--mode', choices=['direct', 'integral', 'brownian'])

    mc = subparsers.add_parser('mc', parents=[common], help='Monte Carlo small-deviation probability')
    _add_dist_options(mc)
    mc.add_argument('--n', help='Walk length')
    mc.add_argument('--eps', type=float)
    mc.add_argument('--tau', type=float)
    mc.add_argument('--reps', help='Replications')

    sweep = subparsers.add_parser('sweep', parents=[common], help='Small-deviation rate regression')
    _add_dist_options(sweep)
    sweep.add_argument('--eps', type=float)
    sweep.add_argument('--ngrid', help='Comma-separated walk lengths, e.g. 1e3,1e4,1e5,1e6')
    sweep.add_argument('--reps', help='Replications')

    truncate = subparsers.add_parser('truncate', parents=[common], help='Truncation diagnostics')
    _add_dist_options(truncate)
    truncate.add_argument('--n', help='Walk length')
    truncate.add_argument('--p', type=float, help='Truncation exponent in (0, 1/2)')
    truncate.add_argument('--reps', help='Replications')

    integral = subparsers.add_parser('integral-test', parents=[common], help='Integral tests J and J_ab')
    integral.add_argument('--family', choices=['c-loglog', 'tabulated'])
    integral.add_argument('--c', type=float)
    integral.add_argument('--a', type=float)
    integral.add_argument('--b', type=float)
    integral.add_argument('--table', help="Tabulated psi as 'n:psi,n:psi,...'")
    integral.add_argument('--nmax', help='Partial sums up to this n')

    condition = subparsers.add_parser('condition', parents=[common], help='Tail second-moment profile')
    _add_dist_options(condition)
    condition.add_argument('--tgrid', help='Comma-separated t values')
    condition.add_argument('--logtgrid', help='Comma-separated log t values')
    condition.add_argument('--kgrid', help='Atom indices k (log t = e^k), list or lo..hi')

    replay = subparsers.add_parser('replay', parents=[common], help='Re-run a JSON record file')
    replay.add_argument('--record', required=True, help='JSON record emitted with --format json')

    runs = subparsers.add_parser('runs', help='Inspect the run ledger')
    runs_sub = runs.add_subparsers(dest='runs_command')
    runs_list = runs_sub.add_parser('list', parents=[common], help='List stored runs')
    runs_list.add_argument('--limit', type=int, default=20)
    runs_list.add_argument('--only', dest='only_command', help='Only runs of this command')
    runs_show = runs_sub.add_parser('show', parents=[common], help='Print a stored record')
    runs_show.add_argument('run_id', type=int)
    runs_replay = runs_sub.add_parser('replay', parents=[common], help='Re-run a stored record')
    runs_replay.add_argument('run_id', type=int)
    return parser


# Option resolution: flags > config file > environment > defaults

def load_config_file(path: Optional[str], command: str) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ParameterError(f"could not read config file {path}: {exc}")
    if not isinstance(data, dict):
        raise ParameterError(f"config file {path} must hold a JSON object")
    values = {key: value for key, value in data.items() if not isinstance(value, dict)}
    values.update(data.get(command, {}))
    return {key.replace("-", "_"): value for key, value in values.items()}


def resolve_options(args: argparse.Namespace, command: str) -> Dict[str, Any]:
    explicit = {key: value for key, value in vars(args).items() if value is not None}
    options = dict(DEFAULTS.get(command, {}))
    options.update(load_config_file(explicit.get("config"), command))
    options.update(explicit)
    if options.get("threads") is None:
        options["threads"] = int(os.getenv("CHUNGLIL_THREADS", "1"))
    if command in SEEDED_COMMANDS:
        options["seed"] = parse_seed(options.get("seed", DEFAULT_SEED))
    else:
        options["seed"] = None
    return options


def build_run_config(options: Dict[str, Any], command: str) -> RunConfig:
    params_keys = set(DEFAULTS.get(command, {})) | {"table", "tgrid", "logtgrid", "kgrid", *DIST_PARAMS}
    params = {key: options[key] for key in sorted(params_keys) if options.get(key) is not None}
    threads = int(options["threads"])
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")
    return RunConfig(
        command, params,
        output_format=options.get("format", "csv"),
        output_path=options.get("output"),
        threads=threads,
        seed=options["seed"],
        store=bool(options.get("store")),
    )


def configure_logging(level_name: Optional[str]) -> None:
    level_name = (level_name or os.getenv("CHUNGLIL_LOG_LEVEL") or "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ParameterError(f"unknown log level {level_name!r}")
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def emit(text: str, output_path: Optional[str]) -> None:
    if output_path:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        Path(output_path).write_text(text)
        logger.info(f"record written to {output_path}")
    else:
        sys.stdout.write(text)


def store_record(record: Dict[str, Any]) -> int:
    from .database import RunRecordRepository, get_db_session, init_database

    init_database()
    with get_db_session() as session:
        run = RunRecordRepository(session).create(record)
        run_id = run.run_id
    logger.info(f"stored run {run_id}")
    return run_id


def _load_stored(run_id: int) -> Dict[str, Any]:
    from .database import RunRecordRepository, get_db_session, init_database

    init_database()
    with get_db_session() as session:
        run = RunRecordRepository(session).get_by_id(run_id)
        if run is None:
            raise ParameterError(f"no stored run with id {run_id}")
        return run.record_dict


def _report_replay(problems: List[str]) -> int:
    if problems:
        for problem in problems:
            print(f"differs: {problem}")
        return 1
    print("reproduced: all numeric fields identical")
    return 0


def runs_command(args: argparse.Namespace, options: Dict[str, Any]) -> int:
    from .database import RunRecordRepository, get_db_session, init_database

    if args.runs_command == 'list':
        init_database()
        with get_db_session() as session:
            for run in RunRecordRepository(session).list_recent(args.limit, args.only_command):
                print(f"{run.run_id}\t{run.created_at:%Y-%m-%d %H:%M:%S}\t{run.command}\tseed={run.seed}\t{run.params}")
        return 0
    if args.runs_command == 'show':
        emit(formatter.render(_load_stored(args.run_id), options.get("format", "json")), options.get("output"))
        return 0
    if args.runs_command == 'replay':
        return _report_replay(replay_record(_load_stored(args.run_id), int(options["threads"])))
    raise ParameterError("runs needs one of list, show, replay")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    try:
        configure_logging(getattr(args, "log_level", None))
        options = resolve_options(args, args.command)
        if args.command == 'runs':
            return runs_command(args, options)
        if args.command == 'replay':
            record = json.loads(Path(args.record).read_text())
            return _report_replay(replay_record(record, int(options["threads"])))

        config = build_run_config(options, args.command)
        record = run_command(config)
        if config.store:
            record["meta"]["run_id"] = store_record(record)
        emit(formatter.render(record, config.output_format), config.output_path)
        return 0
    except ChungLilError as e:
        logger.error(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, ValueError) as e:
        logger.error(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return 2
