"""Semi-analytic success probabilities for the two-vehicle system.

Every decode event of the access layer reduces, per scenario class, to a
minimum-gain threshold on each ordered vehicle (or an infeasible
marker).  Combining the exact scenario-class probabilities with the
cascaded-fading CCDF -- evaluated by adaptive quadrature -- gives the
success probabilities without simulation, which is the independent
check the Monte Carlo engine is verified against.

Under by-gain ordering the two links must be i.i.d.; the joint event
then follows from the order statistics of two draws:
P(max >= a, min >= b) = G(b)^2 - (G(b) - G(a))^2 for a >= b.

Support is deliberately narrow: two vehicles, at most two fading stages
per link, one shared threshold across files.  Everything else is left
to the Monte Carlo path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaincc, gammaln, xlogy

from .access import SCHEMES, PowerAllocation, DecodeThresholds, split_power
from .channel import LinkSpec
from .content import place_cache, scenario_distribution, zipf_profile
from .errors import OracleUnsupportedError, ParameterError

__all__ = [
    "INFEASIBLE",
    "GainThresholdEvent",
    "OracleResult",
    "gamma_ccdf",
    "product_gain_ccdf",
    "reduce_to_gain_event",
    "conditional_success_prob",
    "success_prob",
]

# Marker for a decode stage no gain value can satisfy.
INFEASIBLE = math.inf


@dataclass(frozen=True)
class GainThresholdEvent:
    """Minimum-gain thresholds per ordered position (strong, weak).

    ``INFEASIBLE`` marks a never-satisfiable stage; a self-served
    vehicle carries threshold 0.
    """

    thresholds: tuple[float, float]

    def __post_init__(self) -> None:
        for t in self.thresholds:
            if not (t >= 0.0):  # inf passes, nan fails
                raise ParameterError(f"gain thresholds must be >= 0, got {t!r}")


@dataclass(frozen=True)
class OracleResult:
    """Total success probabilities: per-position marginals, joint, and
    the product of the marginals (the figure-of-merit of the study)."""

    p1: float
    p2: float
    p_joint: float
    p_marg_product: float

    def value(self, metric: str) -> float:
        if metric == "joint":
            return self.p_joint
        if metric == "marg-product":
            return self.p_marg_product
        raise ParameterError(f"unknown metric {metric!r}")


def gamma_ccdf(shape: float, scale: float, x: float) -> float:
    """P(G > x) for G ~ Gamma(shape, scale), via the regularized upper
    incomplete gamma function."""
    if not (math.isfinite(shape) and shape > 0):
        raise ParameterError(f"gamma shape must be positive, got {shape!r}")
    if not (math.isfinite(scale) and scale > 0):
        raise ParameterError(f"gamma scale must be positive, got {scale!r}")
    if math.isnan(x) or x < 0:
        raise ParameterError(f"x must be >= 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    return float(gammaincc(shape, x / scale))


def _gamma_logpdf(g: np.ndarray, shape: float, scale: float) -> np.ndarray:
    return xlogy(shape - 1.0, g) - g / scale - gammaln(shape) - shape * math.log(scale)


@lru_cache(maxsize=None)
def _product_ccdf_two_stage(spec: LinkSpec, x: float) -> float:
    """P(G1 * G2 > x) = integral of ccdf_1(x/g) * pdf_2(g) dg over g > 0."""
    s1, s2 = spec.stages

    def integrand(g: float) -> float:
        if g <= 0.0:
            return 0.0
        tail = gammaincc(s1.gamma_shape, (x / g) / s1.gamma_scale)
        return float(tail * math.exp(_gamma_logpdf(np.asarray(g), s2.gamma_shape, s2.gamma_scale)))

    val, _ = integrate.quad(
        integrand, 0.0, math.inf, epsabs=1e-12, epsrel=1e-12, limit=300
    )
    return min(max(val, 0.0), 1.0)


def product_gain_ccdf(spec: LinkSpec, x: float) -> float:
    """P(link squared gain > x) for one- or two-stage cascades."""
    if math.isnan(x) or x < 0:
        raise ParameterError(f"x must be >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if len(spec.stages) == 1:
        stage = spec.stages[0]
        return gamma_ccdf(stage.gamma_shape, stage.gamma_scale, x)
    if len(spec.stages) == 2:
        return _product_ccdf_two_stage(spec, float(x))
    raise OracleUnsupportedError(
        f"{len(spec.stages)}-stage cascades are outside oracle support; "
        "use the Monte Carlo engine"
    )


def _theta_pair(thresholds: DecodeThresholds, scenario) -> tuple[float, float]:
    requests = getattr(scenario, "requests", None)
    if requests is not None:
        return (thresholds.theta_for(requests[0]), thresholds.theta_for(requests[1]))
    theta = thresholds.uniform_value()
    if theta is None:
        raise OracleUnsupportedError(
            "per-file threshold overrides need explicit requests; "
            "scenario classes support a single shared threshold only"
        )
    return (theta, theta)


def reduce_to_gain_event(
    scheme: str,
    alloc: PowerAllocation,
    thresholds: DecodeThresholds,
    scenario,
    ordering: tuple[int, int] = (0, 1),
    self_hit_power: str = "reallocate",
) -> GainThresholdEvent:
    """Reduce one scenario's decode conditions to per-position gain
    thresholds for two vehicles.

    ``scenario`` is either a :class:`~canoma.content.CacheScenario`
    (per-file thresholds resolved through its requests) or a
    :class:`~canoma.content.ScenarioClass` (shared threshold only).
    ``ordering`` maps positions (strong, weak) to vehicle indices.
    Every SINR condition p*X / (q*X + 1) >= theta becomes
    X >= theta / (p - theta*q) when p > theta*q and is infeasible
    otherwise.
    """
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}")
    if sorted(ordering) != [0, 1]:
        raise ParameterError(f"ordering must be a permutation of (0, 1), got {ordering!r}")
    if len(alloc.powers) != 2:
        raise ParameterError("gain-event reduction covers exactly two vehicles")
    if self_hit_power not in ("reallocate", "idle"):
        raise ParameterError(f"unknown self-hit power policy {self_hit_power!r}")

    theta_by_vehicle = _theta_pair(thresholds, scenario)
    s, w = ordering
    hit_s = scenario.self_hit[s] if hasattr(scenario, "requests") else scenario.self_hit(s)
    hit_w = scenario.self_hit[w] if hasattr(scenario, "requests") else scenario.self_hit(w)
    th_s = theta_by_vehicle[s]
    th_w = theta_by_vehicle[w]
    total = alloc.total
    p_s, p_w = alloc.powers

    def sic_threshold() -> float:
        margin = p_w - th_w * p_s
        return th_w / margin if margin > 0.0 else INFEASIBLE

    if scheme == "canoma":
        solo_s = total if self_hit_power == "reallocate" else p_s
        solo_w = total if self_hit_power == "reallocate" else p_w
        if hit_s and hit_w:
            a, b = 0.0, 0.0
        elif hit_s:
            a, b = 0.0, th_w / solo_w
        elif hit_w:
            a, b = th_s / solo_s, 0.0
        else:
            own = th_s / p_s
            if scenario.cross_cached(w, s):  # strong holds weak's file
                a = own
            else:
                a = max(sic_threshold(), own)
            if scenario.cross_cached(s, w):  # weak holds strong's file
                b = th_w / p_w
            else:
                b = sic_threshold()
    elif scheme == "noma":
        # the BS is cache-blind: both messages are always on the air
        a = 0.0 if hit_s else max(sic_threshold(), th_s / p_s)
        b = 0.0 if hit_w else sic_threshold()
    elif scheme == "oma-cache":
        served = (not hit_s) + (not hit_w)
        a = 0.0 if hit_s else ((1.0 + th_s) ** served - 1.0) / total
        b = 0.0 if hit_w else ((1.0 + th_w) ** served - 1.0) / total
    else:  # oma
        a = 0.0 if hit_s else ((1.0 + th_s) ** 2 - 1.0) / total
        b = 0.0 if hit_w else ((1.0 + th_w) ** 2 - 1.0) / total
    return GainThresholdEvent(thresholds=(a, b))


def conditional_success_prob(
    event: GainThresholdEvent,
    specs: tuple[LinkSpec, LinkSpec],
    policy: str = "by-gain",
) -> tuple[float, float, float]:
    """(p_strong, p_weak, p_joint) of a gain-threshold event under fading.

    Fixed ordering factorises over the two independent links; by-gain
    ordering requires i.i.d. links and uses the order statistics of two
    draws.  Infeasible components contribute probability 0.
    """
    a, b = event.thresholds
    if policy == "fixed":
        g1 = product_gain_ccdf(specs[0], a)
        g2 = product_gain_ccdf(specs[1], b)
        return (g1, g2, g1 * g2)
    if policy != "by-gain":
        raise ParameterError(f"unknown ordering policy {policy!r}")
    if specs[0] != specs[1]:
        raise OracleUnsupportedError(
            "by-gain ordering requires identically distributed links; "
            "use fixed ordering or the Monte Carlo engine"
        )
    ga = product_gain_ccdf(specs[0], a)
    gb = product_gain_ccdf(specs[0], b)
    p_strong = 2.0 * ga - ga * ga
    p_weak = gb * gb
    if a >= b:
        p_joint = gb * gb - (gb - ga) ** 2
    else:
        p_joint = gb * gb
    return (p_strong, p_weak, p_joint)


def success_prob(
    scheme: str,
    *,
    catalog_t: int,
    zeta: float,
    capacities: tuple[int, int],
    total: float,
    alpha: float,
    thresholds: DecodeThresholds | None = None,
    link_specs: tuple[LinkSpec, LinkSpec],
    policy: str = "by-gain",
    zipf_convention: str = "reciprocal",
    self_hit_power: str = "reallocate",
) -> OracleResult:
    """Total success probabilities by exact scenario enumeration.

    For every scenario class (and, under by-gain ordering, each equally
    likely assignment of vehicles to positions) the decode event is
    reduced to gain thresholds and weighted by the class probability.
    The marginal product multiplies the *total* marginals; with caching
    the two outcomes are correlated, so it differs from the joint
    probability and both are reported.
    """
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}")
    if thresholds is None:
        thresholds = DecodeThresholds()
    profile = zipf_profile(catalog_t, zeta, zipf_convention)
    caches = tuple(place_cache(profile, c) for c in capacities)
    classes = scenario_distribution(profile, caches)
    alloc = split_power(total, alpha, 2)

    if policy == "by-gain":
        assignments: tuple[tuple[tuple[int, int], float], ...] = (
            ((0, 1), 0.5),
            ((1, 0), 0.5),
        )
    elif policy == "fixed":
        assignments = (((0, 1), 1.0),)
    else:
        raise ParameterError(f"unknown ordering policy {policy!r}")

    p1 = p2 = p_joint = 0.0
    total_weight = 0.0
    for cls, weight in classes.items():
        c1 = c2 = cj = 0.0
        for ordering, share in assignments:
            event = reduce_to_gain_event(
                scheme, alloc, thresholds, cls, ordering, self_hit_power
            )
            c_strong, c_weak, c_joint = conditional_success_prob(event, link_specs, policy)
            c1 += share * c_strong
            c2 += share * c_weak
            cj += share * c_joint
        total_weight += weight
        p1 += weight * c1
        p2 += weight * c2
        p_joint += weight * cj
    # the class weights sum to 1 only within accumulation error;
    # normalising keeps certain events at exactly 1
    p1 /= total_weight
    p2 /= total_weight
    p_joint /= total_weight
    return OracleResult(p1=p1, p2=p2, p_joint=p_joint, p_marg_product=p1 * p2)
