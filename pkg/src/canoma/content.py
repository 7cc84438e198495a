"""Content placement and per-trial cache scenarios.

Files 1..T at the base station carry a Zipf-derived popularity profile;
every vehicle caches the top-C most popular files during the placement
phase and requests one file per delivery trial.  A trial's cache
scenario records, per vehicle, whether its own request is self-cached,
which other vehicles hold it, and which requests coincide.

Requests are sampled by inverse CDF on the cumulative probability table.
This is deliberate: under shared uniforms the sampled index is monotone
in the profile's concentration, which turns the trend claims of the
study into deterministic per-trial comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np

from .errors import ParameterError

__all__ = [
    "Catalog",
    "PopularityProfile",
    "CacheContents",
    "CacheScenario",
    "ScenarioClass",
    "zipf_profile",
    "place_cache",
    "sample_request",
    "request_from_uniform",
    "classify_scenario",
    "scenario_distribution",
]

# The catalog is fully described by its size T.
Catalog = int

_SUM_TOL = 1e-12


class PopularityProfile:
    """File-request probabilities over a catalog of T files.

    Entries are non-negative, non-increasing in file index (file 1 is
    the most popular) and sum to one within 1e-12.
    """

    def __init__(self, probs) -> None:
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise ParameterError("profile must be a non-empty 1-d probability vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ParameterError("profile entries must be finite and non-negative")
        if abs(probs.sum() - 1.0) > _SUM_TOL:
            raise ParameterError(f"profile entries must sum to 1, got {probs.sum()!r}")
        if np.any(np.diff(probs) > 0):
            raise ParameterError("profile entries must be non-increasing in file index")
        self._probs = probs
        self._probs.setflags(write=False)
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0  # guard searchsorted against cumulative rounding
        self._cdf = cdf
        self._cdf.setflags(write=False)

    @property
    def t(self) -> int:
        return int(self._probs.size)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf

    def __eq__(self, other) -> bool:
        return isinstance(other, PopularityProfile) and np.array_equal(self._probs, other._probs)

    def __repr__(self) -> str:
        return f"PopularityProfile(t={self.t})"


@dataclass(frozen=True)
class CacheContents:
    """A vehicle's cache: a set of file indices bounded by its capacity."""

    files: frozenset[int]
    capacity: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "files", frozenset(self.files))
        if self.capacity < 0:
            raise ParameterError(f"cache capacity must be non-negative, got {self.capacity}")
        if len(self.files) > self.capacity:
            raise ParameterError(
                f"cache holds {len(self.files)} files but capacity is {self.capacity}"
            )

    def __contains__(self, file: int) -> bool:
        return file in self.files


@dataclass(frozen=True)
class CacheScenario:
    """Per-trial classification of requests against cache contents.

    ``cross[i][j]`` is True when vehicle j holds vehicle i's requested
    file (the diagonal equals ``self_hit``).  All flags are pure set
    membership over the inputs of :func:`classify_scenario`.
    """

    requests: tuple[int, ...]
    self_hit: tuple[bool, ...]
    cross: tuple[tuple[bool, ...], ...]
    same_file: tuple[tuple[bool, ...], ...]

    def cross_cached(self, i: int, j: int) -> bool:
        """True when vehicle ``j`` holds vehicle ``i``'s requested file."""
        return self.cross[i][j]

    def same(self, i: int, j: int) -> bool:
        return self.same_file[i][j]

    def two_vehicle_class(self) -> "ScenarioClass":
        if len(self.requests) != 2:
            raise ParameterError("scenario class collapse is defined for two vehicles")
        return ScenarioClass(
            self_hit_1=self.self_hit[0],
            self_hit_2=self.self_hit[1],
            cross_2_holds_1=self.cross[0][1],
            cross_1_holds_2=self.cross[1][0],
            same_file=self.same_file[0][1],
        )


@dataclass(frozen=True)
class ScenarioClass:
    """Distinguishable two-vehicle scenario: the five classification flags."""

    self_hit_1: bool
    self_hit_2: bool
    cross_2_holds_1: bool
    cross_1_holds_2: bool
    same_file: bool

    def self_hit(self, vehicle: int) -> bool:
        return self.self_hit_1 if vehicle == 0 else self.self_hit_2

    def cross_cached(self, i: int, j: int) -> bool:
        """True when vehicle ``j`` holds vehicle ``i``'s requested file."""
        if i == j:
            return self.self_hit(i)
        return self.cross_2_holds_1 if (i, j) == (0, 1) else self.cross_1_holds_2


def zipf_profile(catalog: Catalog, zeta: float, convention: str = "reciprocal") -> PopularityProfile:
    """Zipf-derived popularity over files 1..T.

    With the default ``reciprocal`` convention the rank exponent is
    1/zeta, so zeta -> 0 concentrates all mass on file 1 and large zeta
    approaches a uniform profile.  ``direct`` exposes the textbook
    convention (exponent = zeta) for cross-checks against other tools.
    """
    t = int(catalog)
    if t < 1:
        raise ParameterError(f"catalog size must be >= 1, got {catalog!r}")
    if not (isfinite(zeta) and zeta > 0):
        raise ParameterError(f"zeta must be positive and finite, got {zeta!r}")
    if convention == "reciprocal":
        exponent = 1.0 / zeta
    elif convention == "direct":
        exponent = zeta
    else:
        raise ParameterError(f"unknown zipf convention {convention!r}")
    weights = np.arange(1, t + 1, dtype=float) ** (-exponent)
    return PopularityProfile(weights / weights.sum())


def place_cache(profile: PopularityProfile, capacity: int) -> CacheContents:
    """Deterministic top-C placement: cache files {1, ..., capacity}."""
    capacity = int(capacity)
    if capacity < 0:
        raise ParameterError(f"cache capacity must be non-negative, got {capacity}")
    if capacity > profile.t:
        raise ParameterError(
            f"cache capacity {capacity} exceeds catalog size {profile.t}"
        )
    return CacheContents(files=frozenset(range(1, capacity + 1)), capacity=capacity)


def request_from_uniform(profile: PopularityProfile, u):
    """Inverse-CDF map from uniform draws in [0, 1) to file indices.

    File k is returned iff cdf[k-1] < u <= cdf[k]; accepts scalars or
    arrays.  Exposed separately from :func:`sample_request` because the
    coupled-monotonicity tests feed the same uniforms through different
    profiles.
    """
    idx = np.searchsorted(profile.cdf, u, side="left") + 1
    idx = np.minimum(idx, profile.t)
    if np.ndim(u) == 0:
        return int(idx)
    return idx.astype(np.int64)


def sample_request(profile: PopularityProfile, rng: np.random.Generator, size=None):
    """Sample file indices from the profile by inverse CDF."""
    return request_from_uniform(profile, rng.random(size))


def classify_scenario(requests, caches) -> CacheScenario:
    """Classify one trial's requests against per-vehicle cache contents.

    Every flag is plain set membership; ``same_file[i][j]`` is True iff
    the two requests coincide.
    """
    requests = tuple(int(r) for r in requests)
    caches = tuple(caches)
    if len(requests) != len(caches):
        raise ParameterError(
            f"{len(requests)} requests but {len(caches)} caches"
        )
    n = len(requests)
    self_hit = tuple(requests[i] in caches[i] for i in range(n))
    cross = tuple(
        tuple(requests[i] in caches[j] for j in range(n)) for i in range(n)
    )
    same = tuple(
        tuple(requests[i] == requests[j] for j in range(n)) for i in range(n)
    )
    return CacheScenario(requests=requests, self_hit=self_hit, cross=cross, same_file=same)


def scenario_distribution(profile: PopularityProfile, caches) -> dict[ScenarioClass, float]:
    """Exact two-vehicle scenario-class probabilities under i.i.d. requests.

    Files are partitioned into regions by (in cache 1, in cache 2)
    membership; summing profile masses and squared masses per region
    gives every class probability exactly.  The returned probabilities
    sum to 1 within 1e-12.
    """
    caches = tuple(caches)
    if len(caches) != 2:
        raise ParameterError("scenario_distribution enumerates exactly two vehicles")
    probs = profile.probs
    mass: dict[tuple[bool, bool], float] = {}
    sq_mass: dict[tuple[bool, bool], float] = {}
    for f in range(1, profile.t + 1):
        label = (f in caches[0], f in caches[1])
        p = probs[f - 1]
        mass[label] = mass.get(label, 0.0) + p
        sq_mass[label] = sq_mass.get(label, 0.0) + p * p

    dist: dict[ScenarioClass, float] = {}

    def _add(cls: ScenarioClass, p: float) -> None:
        if p > 0.0:
            dist[cls] = dist.get(cls, 0.0) + p

    for lab1, m1 in mass.items():
        for lab2, m2 in mass.items():
            p_distinct = m1 * m2 - (sq_mass[lab1] if lab1 == lab2 else 0.0)
            _add(
                ScenarioClass(
                    self_hit_1=lab1[0],
                    self_hit_2=lab2[1],
                    cross_2_holds_1=lab1[1],
                    cross_1_holds_2=lab2[0],
                    same_file=False,
                ),
                p_distinct,
            )
        _add(
            ScenarioClass(
                self_hit_1=lab1[0],
                self_hit_2=lab1[1],
                cross_2_holds_1=lab1[1],
                cross_1_holds_2=lab1[0],
                same_file=True,
            ),
            sq_mass[lab1],
        )
    return dist
