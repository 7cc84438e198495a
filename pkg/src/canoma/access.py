"""Per-trial decode outcomes for NOMA and OMA delivery schemes.

Power-domain superposition with noise variance fixed at 1: the base
station transmits one message per served request, vehicles are ordered
by descending channel gain (or a fixed order for cross-checks), and
stronger-ordered positions receive less power.  A vehicle succeeds when
it obtains its requested file, either from its own cache or by decoding
at SINR >= threshold after the successive-cancellation steps below.

Scheme semantics (the cache placement phase happens regardless of the
delivery scheme, so a self-cached request counts as a success under
every scheme):

* ``canoma``   cache-aided NOMA: the BS skips self-cached requests and
  reallocates their power to the remaining active vehicles; receivers
  subtract any message whose file they hold before running SIC.
* ``noma``     conventional NOMA: the BS is blind to cache state and
  transmits every request; receivers run plain power-ordered SIC.
* ``oma-cache`` cache-aided OMA: self-served vehicles give up their
  resource slice, the rest split the resource evenly at full power.
* ``oma``      conventional OMA: every vehicle keeps a 1/N slice.

Duplicate requests are served as independent messages at their own
position powers; coinciding requests change nothing in the decode
chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite
from typing import Sequence

import numpy as np

from .content import CacheScenario
from .errors import ParameterError

__all__ = [
    "SCHEMES",
    "PowerAllocation",
    "DecodeThresholds",
    "UserOrdering",
    "Outcome",
    "order_users",
    "split_power",
    "oma_effective_threshold",
    "decode_noma",
    "decode_oma",
    "noma_pair_outcomes",
    "oma_pair_outcomes",
]

SCHEMES = ("canoma", "noma", "oma-cache", "oma")

# Positions (strongest first) -> vehicle indices.
UserOrdering = tuple[int, ...]


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers by ordered position, strongest position first."""

    total: float
    alpha: float
    powers: tuple[float, ...]


@dataclass(frozen=True)
class DecodeThresholds:
    """Per-file SINR thresholds (linear scale), default 1 for every file."""

    default: float = 1.0
    overrides: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        if not (isfinite(self.default) and self.default > 0):
            raise ParameterError(f"threshold must be positive, got {self.default!r}")
        object.__setattr__(self, "overrides", tuple(sorted(self.overrides)))
        for file, theta in self.overrides:
            if not (isfinite(theta) and theta > 0):
                raise ParameterError(f"threshold for file {file} must be positive, got {theta!r}")

    def theta_for(self, file: int) -> float:
        for f, theta in self.overrides:
            if f == file:
                return theta
        return self.default

    def uniform_value(self) -> float | None:
        """The single shared threshold, or None when files genuinely differ."""
        if all(theta == self.default for _, theta in self.overrides):
            return self.default
        return None

    def table(self, t: int) -> np.ndarray:
        """Thresholds for files 1..t as an array (index file-1)."""
        out = np.full(t, self.default)
        for f, theta in self.overrides:
            if 1 <= f <= t:
                out[f - 1] = theta
        return out


@dataclass(frozen=True)
class Outcome:
    """Per-vehicle success flags: requested file obtained by decode or cache."""

    ok: tuple[bool, ...]


def order_users(gains: Sequence[float], policy: str = "by-gain") -> UserOrdering:
    """Positions by descending gain (ties broken by ascending vehicle
    index), or the identity permutation under the ``fixed`` policy."""
    n = len(gains)
    if n < 1:
        raise ParameterError("ordering needs at least one vehicle")
    if policy == "fixed":
        return tuple(range(n))
    if policy != "by-gain":
        raise ParameterError(f"unknown ordering policy {policy!r}")
    return tuple(sorted(range(n), key=lambda i: (-float(gains[i]), i)))


def split_power(total: float, alpha: float, n: int) -> PowerAllocation:
    """Split total power across n ordered positions.

    Position k (1 = strongest) gets weight alpha^(n-k) * (1-alpha)^(k-1),
    normalised to sum to ``total``; for n = 2 this is exactly
    (alpha * total, (1 - alpha) * total), and for alpha < 0.5 the ladder
    is strictly increasing toward weaker positions.
    """
    if not (isfinite(total) and total > 0):
        raise ParameterError(f"total power must be positive, got {total!r}")
    if not (isfinite(alpha) and 0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    n = int(n)
    if n < 1:
        raise ParameterError(f"vehicle count must be >= 1, got {n}")
    if n == 1:
        powers: tuple[float, ...] = (total,)
    elif n == 2:
        strong = alpha * total
        powers = (strong, total - strong)
    else:
        weights = np.array(
            [alpha ** (n - k) * (1.0 - alpha) ** (k - 1) for k in range(1, n + 1)]
        )
        scaled = total * weights / weights.sum()
        scaled[-1] = total - scaled[:-1].sum()  # make the sum exact
        powers = tuple(float(p) for p in scaled)
    return PowerAllocation(total=total, alpha=alpha, powers=powers)


def oma_effective_threshold(theta: float, share: float) -> float:
    """SINR needed on a fractional orthogonal resource to match the rate
    implied by ``theta`` on the full resource: (1 + theta)^(1/share) - 1."""
    if not (isfinite(theta) and theta > 0):
        raise ParameterError(f"threshold must be positive, got {theta!r}")
    if not (isfinite(share) and 0.0 < share <= 1.0):
        raise ParameterError(f"resource share must lie in (0, 1], got {share!r}")
    return (1.0 + theta) ** (1.0 / share) - 1.0


def _message_powers(total: float, alpha: float, count: int) -> tuple[float, ...]:
    if count == 0:
        return ()
    return split_power(total, alpha, count).powers


def decode_noma(
    gains: Sequence[float],
    alloc: PowerAllocation,
    thresholds: DecodeThresholds,
    scenario: CacheScenario,
    ordering: UserOrdering | None = None,
    cache_aided: bool = True,
    self_hit_power: str = "reallocate",
) -> Outcome:
    """Decode one NOMA trial for any number of vehicles.

    Cache-aided mode transmits only non-self-cached requests (power
    ladder re-spread over the active positions) and lets each receiver
    subtract messages whose files it caches; conventional mode transmits
    everything and ignores cache state during reception.  In both modes
    a receiver SIC-decodes, in descending power order, every remaining
    message of weaker-positioned vehicles, each cancellation requiring
    SINR >= that message's threshold against the still-superposed rest;
    its own decode then faces whatever is left, stronger-positioned
    messages included.  Infeasible steps yield failure, never errors.

    ``self_hit_power`` picks what happens to a self-served vehicle's
    power share in cache-aided mode: ``reallocate`` (default) re-spreads
    the ladder over the active vehicles, ``idle`` leaves each active
    message at its original position power and wastes the rest.
    """
    gains = [float(x) for x in gains]
    n = len(gains)
    if n < 1:
        raise ParameterError("decode needs at least one vehicle")
    if len(scenario.requests) != n:
        raise ParameterError(f"scenario covers {len(scenario.requests)} vehicles, gains {n}")
    if any(not (isfinite(x) and x >= 0) for x in gains):
        raise ParameterError("channel gains must be finite and non-negative")
    if ordering is None:
        ordering = order_users(gains)
    if sorted(ordering) != list(range(n)):
        raise ParameterError(f"ordering must be a permutation of 0..{n - 1}")

    if self_hit_power not in ("reallocate", "idle"):
        raise ParameterError(f"unknown self-hit power policy {self_hit_power!r}")
    rank = {v: k for k, v in enumerate(ordering)}
    if cache_aided:
        transmitted = [v for v in ordering if not scenario.self_hit[v]]
        if self_hit_power == "reallocate":
            powers = _message_powers(alloc.total, alloc.alpha, len(transmitted))
        else:
            if len(alloc.powers) != n:
                raise ParameterError(
                    f"allocation has {len(alloc.powers)} positions for {n} vehicles"
                )
            powers = tuple(alloc.powers[rank[v]] for v in transmitted)
    else:
        transmitted = list(ordering)
        if len(alloc.powers) != n:
            raise ParameterError(
                f"allocation has {len(alloc.powers)} positions for {n} vehicles"
            )
        powers = alloc.powers
    messages = [
        (owner, powers[k], thresholds.theta_for(scenario.requests[owner]))
        for k, owner in enumerate(transmitted)
    ]

    ok: list[bool] = []
    for i in range(n):
        if scenario.self_hit[i]:
            ok.append(True)
            continue
        x = gains[i]
        present = [
            m
            for m in messages
            if m[0] == i or not (cache_aided and scenario.cross_cached(m[0], i))
        ]
        own = next(m for m in present if m[0] == i)
        # only weaker-positioned messages are SIC targets; anything from a
        # stronger position stays as noise (it carries less power under
        # the alpha < 0.5 convention)
        queue = sorted(
            (m for m in present if rank[m[0]] > rank[i]),
            key=lambda m: (-m[1], rank[m[0]]),
        )
        remaining = sum(m[1] for m in present)
        success = True
        for owner, power, theta in queue:
            if power * x < theta * ((remaining - power) * x + 1.0):
                success = False
                break
            remaining -= power
        if success:
            _, p_own, th_own = own
            success = p_own * x >= th_own * ((remaining - p_own) * x + 1.0)
        ok.append(success)
    return Outcome(tuple(ok))


def decode_oma(
    gains: Sequence[float],
    total: float,
    thresholds: DecodeThresholds,
    scenario: CacheScenario,
    cache_exploit: bool = True,
) -> Outcome:
    """Decode one OMA trial: equal time slices at full power.

    With cache exploitation only the A non-self-served vehicles share
    the resource (share 1/A each); without it every vehicle keeps a 1/N
    slice.  There is no interference, so cross-cache flags are ignored.
    """
    gains = [float(x) for x in gains]
    n = len(gains)
    if n < 1:
        raise ParameterError("decode needs at least one vehicle")
    if len(scenario.requests) != n:
        raise ParameterError(f"scenario covers {len(scenario.requests)} vehicles, gains {n}")
    if not (isfinite(total) and total > 0):
        raise ParameterError(f"total power must be positive, got {total!r}")
    active = n - sum(scenario.self_hit) if cache_exploit else n
    ok: list[bool] = []
    for i in range(n):
        if scenario.self_hit[i]:
            ok.append(True)
            continue
        theta = thresholds.theta_for(scenario.requests[i])
        ok.append(total * gains[i] >= oma_effective_threshold(theta, 1.0 / active))
    return Outcome(tuple(ok))


def noma_pair_outcomes(
    x1,
    x2,
    total: float,
    alpha: float,
    th1,
    th2,
    hit1,
    hit2,
    cross_2_holds_1,
    cross_1_holds_2,
    cache_aided: bool = True,
    ordering: str = "by-gain",
    self_hit_power: str = "reallocate",
):
    """Vectorised two-vehicle NOMA decode.

    Array-in/array-out twin of :func:`decode_noma` for the simulation
    engine; broadcasting scalars works too.  Returns
    ``(ok1, ok2, strong_is_1)`` with outcomes indexed by vehicle.
    """
    if self_hit_power not in ("reallocate", "idle"):
        raise ParameterError(f"unknown self-hit power policy {self_hit_power!r}")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    th1 = np.asarray(th1, dtype=float)
    th2 = np.asarray(th2, dtype=float)
    hit1 = np.asarray(hit1, dtype=bool)
    hit2 = np.asarray(hit2, dtype=bool)
    c21 = np.asarray(cross_2_holds_1, dtype=bool)
    c12 = np.asarray(cross_1_holds_2, dtype=bool)
    if ordering == "by-gain":
        strong_is_1 = x1 >= x2
    elif ordering == "fixed":
        strong_is_1 = np.broadcast_to(True, np.broadcast_shapes(x1.shape, x2.shape))
    else:
        raise ParameterError(f"unknown ordering policy {ordering!r}")

    xs = np.where(strong_is_1, x1, x2)
    xw = np.where(strong_is_1, x2, x1)
    ths = np.where(strong_is_1, th1, th2)
    thw = np.where(strong_is_1, th2, th1)
    hs = np.where(strong_is_1, hit1, hit2)
    hw = np.where(strong_is_1, hit2, hit1)
    # strong vehicle holds the weak vehicle's file, and vice versa
    cross_s = np.where(strong_is_1, c12, c21)
    cross_w = np.where(strong_is_1, c21, c12)

    p_s = alpha * total
    p_w = total - p_s

    own_s = p_s * xs >= ths
    sic_s = p_w * xs >= thw * (p_s * xs + 1.0)
    plain_s = sic_s & own_s
    plain_w = p_w * xw >= thw * (p_s * xw + 1.0)

    if cache_aided:
        none_s = np.where(cross_s, own_s, plain_s)
        none_w = np.where(cross_w, p_w * xw >= thw, plain_w)
        # a lone active vehicle decodes interference-free; its power is
        # the full budget or its own position share, per the policy
        solo_s = total if self_hit_power == "reallocate" else p_s
        solo_w = total if self_hit_power == "reallocate" else p_w
        ok_s = np.where(hs, True, np.where(hw, solo_s * xs >= ths, none_s))
        ok_w = np.where(hw, True, np.where(hs, solo_w * xw >= thw, none_w))
    else:
        ok_s = hs | plain_s
        ok_w = hw | plain_w

    ok1 = np.where(strong_is_1, ok_s, ok_w)
    ok2 = np.where(strong_is_1, ok_w, ok_s)
    return ok1, ok2, strong_is_1


def oma_pair_outcomes(x1, x2, total: float, th1, th2, hit1, hit2, cache_exploit: bool = True):
    """Vectorised two-vehicle OMA decode; returns (ok1, ok2)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    th1 = np.asarray(th1, dtype=float)
    th2 = np.asarray(th2, dtype=float)
    hit1 = np.asarray(hit1, dtype=bool)
    hit2 = np.asarray(hit2, dtype=bool)
    if cache_exploit:
        active = 2.0 - hit1.astype(float) - hit2.astype(float)
    else:
        active = np.broadcast_to(2.0, np.broadcast_shapes(hit1.shape, hit2.shape))
    ok1 = hit1 | (total * x1 >= (1.0 + th1) ** active - 1.0)
    ok2 = hit2 | (total * x2 >= (1.0 + th2) ** active - 1.0)
    return ok1, ok2
