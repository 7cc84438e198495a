"""Seeded Monte Carlo engine: trial execution, estimates, parameter sweeps.

Trials are organised in fixed blocks of 65536; block c draws from a
Philox stream keyed by SeedSequence((seed, c)), so any trial's variates
are a deterministic function of (seed, trial index) and results are
bit-identical for any worker count.  Within a block the draw order is
fixed -- request uniforms first, then the per-stage gamma variates of
each link -- which makes runs over different grid values consume the
same randomness per trial (common random numbers): sweeping SNR, cache
size, catalog size, or the popularity parameter never changes the
sampled gains, and requests always map through the inverse CDF of the
same two uniforms.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .access import SCHEMES, DecodeThresholds, noma_pair_outcomes, oma_pair_outcomes
from .channel import LinkSpec
from .content import zipf_profile
from .errors import ParameterError

__all__ = [
    "CHUNK",
    "METRICS",
    "SWEEP_PARAMETERS",
    "DEFAULT_LINK_SPEC",
    "TrialConfig",
    "Estimate",
    "SweepRow",
    "ResultTable",
    "db_to_linear",
    "linear_to_db",
    "summarize",
    "run_point",
    "run_point_multi",
    "sweep",
]

CHUNK = 1 << 16
METRICS = ("marg-product", "joint")
SWEEP_PARAMETERS = ("snr_db", "cache_size", "zeta", "catalog_t")
ORDERING_POLICIES = ("by-gain", "fixed")

DEFAULT_LINK_SPEC = LinkSpec.from_pairs([(1.0, 1.0), (2.0, 2.0)])

_Z95 = 1.959963984540054


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


@dataclass(frozen=True)
class TrialConfig:
    """Everything one Monte Carlo run depends on.

    ``rho`` is the total transmit SNR in linear scale (noise variance is
    1, so it equals the total transmit power); dB values are converted
    at the CLI boundary.  ``cache`` is one capacity for both vehicles or
    a per-vehicle pair.
    """

    n_trials: int = 1_000_000
    seed: int = 1
    scheme: str = "canoma"
    files: int = 10
    zeta: float = 0.8
    cache: int | tuple[int, int] = 0
    alpha: float = 0.2
    rho: float = 10.0
    thresholds: DecodeThresholds = field(default_factory=DecodeThresholds)
    link_specs: tuple[LinkSpec, LinkSpec] = (DEFAULT_LINK_SPEC, DEFAULT_LINK_SPEC)
    ordering: str = "by-gain"
    metric: str = "marg-product"
    zipf_convention: str = "reciprocal"
    self_hit_power: str = "reallocate"

    @property
    def capacities(self) -> tuple[int, int]:
        if isinstance(self.cache, tuple):
            return self.cache
        return (int(self.cache), int(self.cache))

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.rho)

    def validate(self) -> None:
        if not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ParameterError(f"n_trials must be a positive integer, got {self.n_trials!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not isinstance(self.files, int) or self.files < 1:
            raise ParameterError(f"files must be a positive integer, got {self.files!r}")
        if not (math.isfinite(self.zeta) and self.zeta > 0):
            raise ParameterError(f"zeta must be positive, got {self.zeta!r}")
        for c in self.capacities:
            if not isinstance(c, int) or not (0 <= c <= self.files):
                raise ParameterError(
                    f"cache capacity must lie in 0..{self.files}, got {c!r}"
                )
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ParameterError(f"rho must be positive, got {self.rho!r}")
        if self.ordering not in ORDERING_POLICIES:
            raise ParameterError(
                f"ordering must be one of {ORDERING_POLICIES}, got {self.ordering!r}"
            )
        if self.metric not in METRICS:
            raise ParameterError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if len(self.link_specs) != 2 or not all(isinstance(s, LinkSpec) for s in self.link_specs):
            raise ParameterError("link_specs must be a pair of LinkSpec")
        if self.zipf_convention not in ("reciprocal", "direct"):
            raise ParameterError(f"unknown zipf convention {self.zipf_convention!r}")
        if self.self_hit_power not in ("reallocate", "idle"):
            raise ParameterError(
                f"self_hit_power must be 'reallocate' or 'idle', got {self.self_hit_power!r}"
            )


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with 95% normal-approximation interval.

    ``p1``/``p2`` are the per-position marginals (strong/weak under
    by-gain ordering, vehicle 1/2 under fixed ordering); ``p_hat`` is
    the selected metric's value and the interval belongs to it.  The
    marginal-product standard error comes from the delta method with the
    empirical covariance of the two marginals.
    """

    metric: str
    p_hat: float
    stderr: float
    ci_low: float
    ci_high: float
    n: int
    p1: float
    p2: float
    p_joint: float
    p_marg_product: float
    stderr_joint: float
    stderr_marg_product: float


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    scheme: str
    metric: str
    p_joint: float
    p_marg_product: float
    p1: float
    p2: float
    stderr_joint: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ResultTable:
    param: str
    grid: tuple[float, ...]
    schemes: tuple[str, ...]
    metric: str
    seed: int
    rows: tuple[SweepRow, ...]


def summarize(successes: Sequence[int], n: int, metric: str = "marg-product") -> Estimate:
    """Aggregate (strong, weak, joint) success counts into an Estimate."""
    if metric not in METRICS:
        raise ParameterError(f"metric must be one of {METRICS}, got {metric!r}")
    if not isinstance(n, int) or n < 1:
        raise ParameterError(f"trial count must be a positive integer, got {n!r}")
    s1, s2, s_joint = (int(s) for s in successes)
    for s in (s1, s2, s_joint):
        if not (0 <= s <= n):
            raise ParameterError(f"success count {s} outside 0..{n}")
    p1 = s1 / n
    p2 = s2 / n
    p_joint = s_joint / n
    p_mp = p1 * p2
    se_joint = math.sqrt(p_joint * (1.0 - p_joint) / n)
    cov = (p_joint - p1 * p2) / n
    var_mp = (
        p2 * p2 * p1 * (1.0 - p1) / n
        + p1 * p1 * p2 * (1.0 - p2) / n
        + 2.0 * p1 * p2 * cov
    )
    se_mp = math.sqrt(max(var_mp, 0.0))
    p_hat, se = (p_joint, se_joint) if metric == "joint" else (p_mp, se_mp)
    return Estimate(
        metric=metric,
        p_hat=p_hat,
        stderr=se,
        ci_low=max(0.0, p_hat - _Z95 * se),
        ci_high=min(1.0, p_hat + _Z95 * se),
        n=n,
        p1=p1,
        p2=p2,
        p_joint=p_joint,
        p_marg_product=p_mp,
        stderr_joint=se_joint,
        stderr_marg_product=se_mp,
    )


def _chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, chunk))))


def _run_chunk(args):
    (
        seed,
        chunk,
        length,
        link_specs,
        cdf,
        cap1,
        cap2,
        th_table,
        total,
        alpha,
        ordering,
        self_hit_power,
        schemes,
        collect,
    ) = args
    rng = _chunk_generator(seed, chunk)
    # Full-size draws keep every trial's variates independent of n_trials.
    u = rng.random((CHUNK, 2))
    gains = []
    for spec in link_specs:
        x = np.ones(CHUNK)
        for stage in spec.stages:
            x *= rng.standard_gamma(stage.m, size=CHUNK) * (stage.omega / stage.m)
        gains.append(x[:length])
    x1, x2 = gains
    t = len(cdf)
    r1 = np.minimum(np.searchsorted(cdf, u[:length, 0], side="left") + 1, t)
    r2 = np.minimum(np.searchsorted(cdf, u[:length, 1], side="left") + 1, t)
    # top-C placement: membership is an index comparison
    hit1 = r1 <= cap1
    hit2 = r2 <= cap2
    cross_2_holds_1 = r1 <= cap2
    cross_1_holds_2 = r2 <= cap1
    th1 = th_table[r1 - 1]
    th2 = th_table[r2 - 1]
    if ordering == "by-gain":
        strong_is_1 = x1 >= x2
    else:
        strong_is_1 = np.ones(length, dtype=bool)

    out = {}
    for scheme in schemes:
        if scheme == "canoma" or scheme == "noma":
            ok1, ok2, _ = noma_pair_outcomes(
                x1,
                x2,
                total,
                alpha,
                th1,
                th2,
                hit1,
                hit2,
                cross_2_holds_1,
                cross_1_holds_2,
                cache_aided=(scheme == "canoma"),
                ordering=ordering,
                self_hit_power=self_hit_power,
            )
        else:
            ok1, ok2 = oma_pair_outcomes(
                x1, x2, total, th1, th2, hit1, hit2, cache_exploit=(scheme == "oma-cache")
            )
        ok_strong = np.where(strong_is_1, ok1, ok2)
        ok_weak = np.where(strong_is_1, ok2, ok1)
        joint = ok1 & ok2
        counts = (int(ok_strong.sum()), int(ok_weak.sum()), int(joint.sum()))
        outcomes = np.column_stack([ok1, ok2]) if collect else None
        out[scheme] = (counts, outcomes)
    return out


def _simulate(
    config: TrialConfig,
    schemes: Sequence[str],
    workers: int = 1,
    collect_outcomes: bool = False,
):
    """Run all trials once and decode them under every requested scheme.

    Returns ``{scheme: (counts, outcomes)}`` with counts = (strong,
    weak, joint) success totals and outcomes an (n, 2) vehicle-indexed
    boolean array when requested.
    """
    config.validate()
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    profile = zipf_profile(config.files, config.zeta, config.zipf_convention)
    cap1, cap2 = config.capacities
    th_table = config.thresholds.table(config.files)
    n = config.n_trials
    n_chunks = (n + CHUNK - 1) // CHUNK
    tasks = [
        (
            config.seed,
            c,
            min(CHUNK, n - c * CHUNK),
            config.link_specs,
            profile.cdf,
            cap1,
            cap2,
            th_table,
            config.rho,
            config.alpha,
            config.ordering,
            config.self_hit_power,
            tuple(schemes),
            collect_outcomes,
        )
        for c in range(n_chunks)
    ]
    if workers <= 1 or n_chunks == 1:
        chunk_results = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(_run_chunk, tasks))

    results = {}
    for scheme in schemes:
        s1 = s2 = sj = 0
        pieces = []
        for res in chunk_results:
            counts, outcomes = res[scheme]
            s1 += counts[0]
            s2 += counts[1]
            sj += counts[2]
            if collect_outcomes:
                pieces.append(outcomes)
        outcome_arr = np.concatenate(pieces) if collect_outcomes else None
        results[scheme] = ((s1, s2, sj), outcome_arr)
    return results


def run_point(
    config: TrialConfig,
    workers: int = 1,
    return_outcomes: bool = False,
):
    """Monte Carlo estimate for one configuration.

    Deterministic for a given (seed, config) and invariant to
    ``workers``.  With ``return_outcomes`` the per-trial, per-vehicle
    success booleans come back alongside the estimate.
    """
    results = _simulate(config, (config.scheme,), workers, return_outcomes)
    counts, outcomes = results[config.scheme]
    est = summarize(counts, config.n_trials, config.metric)
    if return_outcomes:
        return est, outcomes
    return est


def run_point_multi(
    config: TrialConfig,
    schemes: Sequence[str],
    workers: int = 1,
    return_outcomes: bool = False,
):
    """Like :func:`run_point` but decodes the same sampled trials under
    several schemes at once (the schemes share all randomness)."""
    results = _simulate(config, tuple(schemes), workers, return_outcomes)
    out = {}
    for scheme in schemes:
        counts, outcomes = results[scheme]
        est = summarize(counts, config.n_trials, config.metric)
        out[scheme] = (est, outcomes) if return_outcomes else est
    return out


def _config_at(config: TrialConfig, parameter: str, value) -> TrialConfig:
    if parameter == "snr_db":
        return dataclasses.replace(config, rho=db_to_linear(float(value)))
    if parameter == "cache_size":
        return dataclasses.replace(config, cache=int(value))
    if parameter == "zeta":
        return dataclasses.replace(config, zeta=float(value))
    if parameter == "catalog_t":
        return dataclasses.replace(config, files=int(value))
    raise ParameterError(f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")


def _validate_grid_value(config: TrialConfig, parameter: str, value) -> float:
    def bad(reason: str):
        return ParameterError(f"grid value {value!r} invalid for {parameter}: {reason}")

    if parameter == "snr_db":
        v = float(value)
        if not math.isfinite(v):
            raise bad("SNR in dB must be finite")
        return v
    if parameter == "cache_size":
        v = int(value)
        if v != value or not (0 <= v <= config.files):
            raise bad(f"cache capacity must be an integer in 0..{config.files}")
        return float(v)
    if parameter == "zeta":
        v = float(value)
        if not (math.isfinite(v) and v > 0):
            raise bad("zeta must be positive")
        return v
    if parameter == "catalog_t":
        v = int(value)
        cmax = max(config.capacities)
        if v != value or v < 1 or v < cmax:
            raise bad(f"catalog size must be an integer >= max(1, cache {cmax})")
        return float(v)
    raise ParameterError(f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")


def sweep(
    config: TrialConfig,
    parameter: str,
    grid: Iterable,
    schemes: Sequence[str] | None = None,
    workers: int = 1,
) -> ResultTable:
    """One estimate per (grid value, scheme) under a shared base seed.

    All runs reuse the same trial-indexed randomness, so comparisons
    down the grid are coupled by common random numbers.  Rows are sorted
    by grid value, then scheme name.
    """
    config.validate()
    if schemes is None:
        schemes = (config.scheme,)
    schemes = tuple(schemes)
    if not schemes:
        raise ParameterError("at least one scheme is required")
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    grid = list(grid)
    if not grid:
        raise ParameterError("sweep grid must not be empty")
    values = sorted({_validate_grid_value(config, parameter, v) for v in grid})

    rows = []
    for value in values:
        cfg = _config_at(config, parameter, value)
        estimates = run_point_multi(cfg, schemes, workers=workers)
        for scheme in sorted(schemes):
            est = estimates[scheme]
            rows.append(
                SweepRow(
                    param=parameter,
                    value=value,
                    scheme=scheme,
                    metric=config.metric,
                    p_joint=est.p_joint,
                    p_marg_product=est.p_marg_product,
                    p1=est.p1,
                    p2=est.p2,
                    stderr_joint=est.stderr_joint,
                    trials=config.n_trials,
                    seed=config.seed,
                )
            )
    return ResultTable(
        param=parameter,
        grid=tuple(values),
        schemes=tuple(sorted(schemes)),
        metric=config.metric,
        seed=config.seed,
        rows=tuple(rows),
    )
