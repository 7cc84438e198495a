"""Command-line front end: run points, sweeps, and oracle checks as CSV.

Output is a ``#``-prefixed manifest block (resolved configuration, tool
version, seed, timestamp) followed by a fixed-column CSV table.  Given
the same command line and seed the data rows are byte-identical across
runs and worker counts; only the manifest timestamp varies.

Exit codes: 0 success, 1 internal error, 2 usage or validation error,
3 oracle-check failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

from . import __version__
from .access import SCHEMES, DecodeThresholds
from .channel import LinkSpec
from .engine import (
    METRICS,
    TrialConfig,
    db_to_linear,
    run_point,
    run_point_multi,
    sweep,
)
from .errors import OracleUnsupportedError, ParameterError
from .oracle import success_prob

__all__ = ["main", "entry"]

_HEADER = "param,value,scheme,metric,p_joint,p_marg_product,p1,p2,stderr_joint,trials,seed"
_ORACLE_HEADER = "snr_db,zeta,files,cache,scheme,metric,p_mc,p_oracle,stderr,z,status"

# CLI sweep names -> engine parameter names
_SWEEP_NAMES = {
    "snr_db": "snr_db",
    "cache": "cache_size",
    "zeta": "zeta",
    "files": "catalog_t",
}

# criterion grid for a bare `oracle-check`
_DEFAULT_CHECK_SNR_DB = (0.0, 5.0, 10.0, 15.0, 20.0)
_DEFAULT_CHECK_ZETA = (0.4, 0.8, 1.6)
_DEFAULT_CHECK_FILES_CACHE = ((10, 0), (10, 2), (10, 5), (50, 2))


class UsageError(Exception):
    """Bad flag value; the message names the flag."""


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _parse_link_spec(text: str, flag: str) -> LinkSpec:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if len(values) < 2 or len(values) % 2 != 0:
        raise UsageError(f"{flag} expects (m,omega) pairs, got {len(values)} numbers")
    try:
        return LinkSpec.from_pairs(zip(values[0::2], values[1::2]))
    except ParameterError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _parse_schemes(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    if not names:
        raise UsageError("--schemes expects a comma-separated list of schemes")
    for name in names:
        if name not in SCHEMES:
            raise UsageError(f"--schemes: unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")
    return names


def _add_model_flags(sp: argparse.ArgumentParser, defaults: bool = True) -> None:
    d = (lambda v: v) if defaults else (lambda v: None)
    sp.add_argument("--snr-db", type=float, default=d(10.0), help="total transmit SNR in dB")
    sp.add_argument("--zeta", type=float, default=d(0.8), help="popularity parameter")
    sp.add_argument("--files", type=int, default=d(10), help="catalog size T")
    sp.add_argument("--cache", type=int, default=d(0), help="per-vehicle cache capacity C")
    sp.add_argument("--alpha", type=float, default=0.2, help="power fraction of the strong vehicle")
    sp.add_argument("--theta", type=float, default=1.0, help="SINR threshold (all files)")
    sp.add_argument("--trials", type=int, default=1_000_000, help="Monte Carlo trials")
    sp.add_argument("--seed", type=int, default=1, help="base seed")
    sp.add_argument("--ordering", choices=["by-gain", "fixed"], default="by-gain")
    sp.add_argument("--metric", choices=list(METRICS), default="marg-product")
    sp.add_argument(
        "--link-spec",
        default="1,1,2,2",
        help="cascade stages as m1,omega1,m2,omega2,... (both links)",
    )
    sp.add_argument("--link-spec-1", default=None, help="override the first link's stages")
    sp.add_argument("--link-spec-2", default=None, help="override the second link's stages")
    sp.add_argument("--workers", type=int, default=1, help="parallel workers (never changes results)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="canoma",
        description="Cache-aided NOMA downlink: Monte Carlo study with a semi-analytic oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_point = sub.add_parser("point", help="estimate one configuration, emit one CSV row")
    p_point.add_argument("--scheme", choices=list(SCHEMES), default="canoma")
    _add_model_flags(p_point)
    p_point.set_defaults(func=_cmd_point)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over a grid")
    p_sweep.add_argument("--schemes", default="canoma", help="comma-separated scheme list")
    p_sweep.add_argument("--sweep", choices=sorted(_SWEEP_NAMES), required=True)
    p_sweep.add_argument("--grid", required=True, help="comma-separated grid values")
    _add_model_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_check = sub.add_parser(
        "oracle-check",
        help="compare Monte Carlo against the semi-analytic oracle "
        "(bare invocation runs the full default grid)",
    )
    p_check.add_argument("--scheme", choices=list(SCHEMES), default=None)
    p_check.add_argument("--schemes", default=None, help="comma-separated scheme list")
    p_check.add_argument("--sweep", choices=sorted(_SWEEP_NAMES), default=None)
    p_check.add_argument("--grid", default=None, help="comma-separated grid values")
    p_check.add_argument(
        "--oracle-alpha",
        type=float,
        default=None,
        help="verification hook: feed this alpha to the oracle side only",
    )
    _add_model_flags(p_check, defaults=False)
    p_check.set_defaults(func=_cmd_oracle_check)

    p_version = sub.add_parser("version", help="print the tool version")
    p_version.set_defaults(func=_cmd_version)
    return parser


def _config_from(args, scheme: str) -> TrialConfig:
    if not (args.files >= 1):
        raise UsageError(f"--files must be a positive integer, got {args.files}")
    if not (0 <= args.cache <= args.files):
        raise UsageError(f"--cache must lie in 0..{args.files} (files), got {args.cache}")
    if not (args.zeta > 0):
        raise UsageError(f"--zeta must be positive, got {args.zeta}")
    if not (0.0 < args.alpha < 1.0):
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if not (args.theta > 0):
        raise UsageError(f"--theta must be positive, got {args.theta}")
    if args.trials < 1:
        raise UsageError(f"--trials must be a positive integer, got {args.trials}")
    if not (0 <= args.seed < 2**64):
        raise UsageError(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
    if args.workers < 1:
        raise UsageError(f"--workers must be a positive integer, got {args.workers}")
    base = _parse_link_spec(args.link_spec, "--link-spec")
    link1 = _parse_link_spec(args.link_spec_1, "--link-spec-1") if args.link_spec_1 else base
    link2 = _parse_link_spec(args.link_spec_2, "--link-spec-2") if args.link_spec_2 else base
    return TrialConfig(
        n_trials=args.trials,
        seed=args.seed,
        scheme=scheme,
        files=args.files,
        zeta=args.zeta,
        cache=args.cache,
        alpha=args.alpha,
        rho=db_to_linear(args.snr_db),
        thresholds=DecodeThresholds(default=args.theta),
        link_specs=(link1, link2),
        ordering=args.ordering,
        metric=args.metric,
    )


def _manifest(args, config: TrialConfig, schemes: tuple[str, ...]) -> list[str]:
    resolved = {
        "schemes": list(schemes),
        "snr_db": config.snr_db,
        "zeta": config.zeta,
        "files": config.files,
        "cache": list(config.capacities),
        "alpha": config.alpha,
        "theta": config.thresholds.default,
        "trials": config.n_trials,
        "seed": config.seed,
        "ordering": config.ordering,
        "metric": config.metric,
        "self_hit_power": config.self_hit_power,
        "link_spec_1": [[s.m, s.omega] for s in config.link_specs[0].stages],
        "link_spec_2": [[s.m, s.omega] for s in config.link_specs[1].stages],
        "workers": args.workers,
    }
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return [
        f"# canoma {__version__}",
        f"# timestamp: {stamp}",
        "# snr convention: total transmit SNR rho = P/sigma^2 with sigma^2 = 1; CLI values in dB",
        f"# config: {json.dumps(resolved, sort_keys=True)}",
    ]


def _write(lines) -> None:
    sys.stdout.write("\n".join(lines) + "\n")


def _point_row(param: str, value: float, scheme: str, config: TrialConfig, est) -> str:
    return ",".join(
        [
            param,
            _fmt(value),
            scheme,
            config.metric,
            _fmt(est.p_joint),
            _fmt(est.p_marg_product),
            _fmt(est.p1),
            _fmt(est.p2),
            _fmt(est.stderr_joint),
            str(config.n_trials),
            str(config.seed),
        ]
    )


def _cmd_point(args) -> int:
    config = _config_from(args, args.scheme)
    est = run_point(config, workers=args.workers)
    lines = _manifest(args, config, (args.scheme,))
    lines.append(_HEADER)
    lines.append(_point_row("snr_db", args.snr_db, args.scheme, config, est))
    _write(lines)
    return 0


def _parse_grid(text: str, cli_param: str) -> list:
    raw = [v.strip() for v in text.split(",") if v.strip()]
    if not raw:
        raise UsageError("--grid must list at least one value")
    values = []
    for item in raw:
        try:
            if cli_param in ("cache", "files"):
                values.append(int(item))
            else:
                values.append(float(item))
        except ValueError:
            raise UsageError(f"--grid value {item!r} is not valid for sweep {cli_param}") from None
    return values


def _cmd_sweep(args) -> int:
    schemes = _parse_schemes(args.schemes)
    config = _config_from(args, schemes[0])
    values = _parse_grid(args.grid, args.sweep)
    table = sweep(config, _SWEEP_NAMES[args.sweep], values, schemes, workers=args.workers)
    lines = _manifest(args, config, schemes)
    lines.append(_HEADER)
    for row in table.rows:
        lines.append(
            ",".join(
                [
                    row.param,
                    _fmt(row.value),
                    row.scheme,
                    row.metric,
                    _fmt(row.p_joint),
                    _fmt(row.p_marg_product),
                    _fmt(row.p1),
                    _fmt(row.p2),
                    _fmt(row.stderr_joint),
                    str(row.trials),
                    str(row.seed),
                ]
            )
        )
    _write(lines)
    return 0


def _check_points(args):
    """Resolve the oracle-check point list: (files, cache, zeta, snr_db)."""
    explicit = any(
        v is not None
        for v in (args.snr_db, args.zeta, args.files, args.cache, args.scheme, args.schemes)
    )
    if args.schemes is not None:
        schemes = _parse_schemes(args.schemes)
    elif args.scheme is not None:
        schemes = (args.scheme,)
    else:
        schemes = SCHEMES
    if not explicit and args.sweep is None:
        points = [
            (files, cache, zeta, snr)
            for snr in _DEFAULT_CHECK_SNR_DB
            for zeta in _DEFAULT_CHECK_ZETA
            for files, cache in _DEFAULT_CHECK_FILES_CACHE
        ]
        return points, schemes

    args.snr_db = 10.0 if args.snr_db is None else args.snr_db
    args.zeta = 0.8 if args.zeta is None else args.zeta
    args.files = 10 if args.files is None else args.files
    args.cache = 0 if args.cache is None else args.cache
    if args.sweep is not None:
        if args.grid is None:
            raise UsageError("--sweep needs --grid")
        values = _parse_grid(args.grid, args.sweep)
        points = []
        for v in values:
            point = {
                "snr_db": (args.files, args.cache, args.zeta, float(v)),
                "zeta": (args.files, args.cache, float(v), args.snr_db),
                "files": (int(v), args.cache, args.zeta, args.snr_db),
                "cache": (args.files, int(v), args.zeta, args.snr_db),
            }[args.sweep]
            points.append(point)
        return points, schemes
    return [(args.files, args.cache, args.zeta, args.snr_db)], schemes


def _cmd_oracle_check(args) -> int:
    points, schemes = _check_points(args)
    lines = None
    all_ok = True
    rows = []
    base_config = None
    for files, cache, zeta, snr_db in points:
        ns = argparse.Namespace(**vars(args))
        ns.files, ns.cache, ns.zeta, ns.snr_db = files, cache, zeta, snr_db
        config = _config_from(ns, schemes[0])
        if base_config is None:
            base_config = config
        estimates = run_point_multi(config, schemes, workers=args.workers)
        for scheme in schemes:
            est = estimates[scheme]
            oracle = success_prob(
                scheme,
                catalog_t=config.files,
                zeta=config.zeta,
                capacities=config.capacities,
                total=config.rho,
                alpha=config.alpha if args.oracle_alpha is None else args.oracle_alpha,
                thresholds=config.thresholds,
                link_specs=config.link_specs,
                policy=config.ordering,
            )
            for metric, p_mc, se in (
                ("joint", est.p_joint, est.stderr_joint),
                ("marg-product", est.p_marg_product, est.stderr_marg_product),
            ):
                p_or = oracle.value(metric)
                delta = abs(p_mc - p_or)
                ok = delta <= 4.0 * se
                all_ok = all_ok and ok
                z = 0.0 if delta == 0.0 else (delta / se if se > 0 else float("inf"))
                rows.append(
                    ",".join(
                        [
                            _fmt(snr_db),
                            _fmt(zeta),
                            str(files),
                            str(cache),
                            scheme,
                            metric,
                            _fmt(p_mc),
                            _fmt(p_or),
                            _fmt(se),
                            _fmt(z),
                            "pass" if ok else "FAIL",
                        ]
                    )
                )
    lines = _manifest(args, base_config, tuple(schemes))
    lines.append(_ORACLE_HEADER)
    lines.extend(rows)
    _write(lines)
    return 0 if all_ok else 3


def _cmd_version(args) -> int:
    print(f"canoma {__version__}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleUnsupportedError as exc:
        print(f"error: configuration outside oracle support: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
