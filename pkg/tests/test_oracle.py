import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaincc, kv

from canoma import (
    DecodeThresholds,
    GainThresholdEvent,
    LinkSpec,
    OracleUnsupportedError,
    ParameterError,
    ScenarioClass,
    conditional_success_prob,
    gamma_ccdf,
    product_gain_ccdf,
    reduce_to_gain_event,
    sample_link_gain,
    split_power,
    success_prob,
)
from canoma.oracle import INFEASIBLE

PAPER_LINK = LinkSpec.from_pairs([(1, 1), (2, 2)])
EXP_LINK = LinkSpec.from_pairs([(1, 1)])
UNIT_THETA = DecodeThresholds()
NO_FLAGS = ScenarioClass(False, False, False, False, False)


def bessel_closed_form(x: float) -> float:
    """P(G1*G2 > x) for stages (1,1),(2,2): 2x*K2(2*sqrt(x))."""
    return float(2.0 * x * kv(2, 2.0 * math.sqrt(x)))


def swapped_order_quadrature(x: float) -> float:
    """Same tail probability, integrating over the first stage instead."""
    # stage 1 is Exp(1); stage 2 squared amplitude is Gamma(2, 1)
    f = lambda g: math.exp(-g) * gammaincc(2.0, x / g)
    val, _ = integrate.quad(f, 0.0, math.inf, epsabs=1e-12, epsrel=1e-12, limit=300)
    return val


class TestGammaCcdf:
    def test_exponential_point(self):
        assert gamma_ccdf(1.0, 1.0, 1.0) == pytest.approx(math.exp(-1.0), abs=1e-10)

    def test_erlang_two_point(self):
        assert gamma_ccdf(2.0, 1.0, 2.0) == pytest.approx(3.0 * math.exp(-2.0), abs=1e-10)

    def test_full_mass_above_zero(self):
        assert gamma_ccdf(3.7, 0.4, 0.0) == 1.0

    @pytest.mark.parametrize("shape,scale,x", [(0, 1, 1), (1, 0, 1), (1, 1, -0.5)])
    def test_rejects_bad_parameters(self, shape, scale, x):
        with pytest.raises(ParameterError):
            gamma_ccdf(shape, scale, x)


class TestProductGainCcdf:
    def test_zero_is_certain(self):
        assert product_gain_ccdf(PAPER_LINK, 0.0) == 1.0

    def test_single_stage_reduces_to_gamma(self):
        assert product_gain_ccdf(EXP_LINK, 1.0) == pytest.approx(math.exp(-1.0), abs=1e-10)

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.0, 5.0])
    def test_three_way_agreement_on_paper_link(self, x):
        quad = product_gain_ccdf(PAPER_LINK, x)
        closed = bessel_closed_form(x)
        direct = swapped_order_quadrature(x)
        assert quad == pytest.approx(closed, abs=1e-6)
        assert quad == pytest.approx(direct, abs=1e-6)
        assert closed == pytest.approx(direct, abs=1e-6)

    def test_monte_carlo_agreement_ten_million(self):
        rng = np.random.Generator(np.random.Philox(41))
        draws = sample_link_gain(PAPER_LINK, rng, size=10_000_000)
        for x in (0.1, 0.5, 1.0, 2.0, 5.0):
            p = product_gain_ccdf(PAPER_LINK, x)
            freq = (draws > x).mean()
            se = math.sqrt(p * (1 - p) / draws.size)
            assert abs(freq - p) <= 4 * se

    def test_non_increasing_and_vanishing(self):
        xs = np.linspace(0.0, 60.0, 60)
        vals = [product_gain_ccdf(PAPER_LINK, float(x)) for x in xs]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
        assert vals[0] == 1.0
        assert vals[-1] < 1e-5

    def test_three_stages_unsupported(self):
        spec = LinkSpec.from_pairs([(1, 1), (1, 1), (1, 1)])
        with pytest.raises(OracleUnsupportedError):
            product_gain_ccdf(spec, 1.0)


class TestReduceToGainEvent:
    def alloc(self, total=10.0, alpha=0.2):
        return split_power(total, alpha, 2)

    def test_noma_no_caching(self):
        ev = reduce_to_gain_event("noma", self.alloc(), UNIT_THETA, NO_FLAGS)
        assert ev.thresholds[0] == pytest.approx(0.5)
        assert ev.thresholds[1] == pytest.approx(1.0 / 6.0)

    def test_equal_split_marks_weak_infeasible(self):
        ev = reduce_to_gain_event("noma", self.alloc(alpha=0.5), UNIT_THETA, NO_FLAGS)
        assert ev.thresholds[0] == INFEASIBLE
        assert ev.thresholds[1] == INFEASIBLE

    def test_oma_both_active(self):
        ev = reduce_to_gain_event("oma", self.alloc(), UNIT_THETA, NO_FLAGS)
        assert ev.thresholds == (pytest.approx(0.3), pytest.approx(0.3))

    def test_self_hits_yield_zero_thresholds(self):
        both = ScenarioClass(True, True, True, True, False)
        for scheme in ("canoma", "noma", "oma-cache", "oma"):
            ev = reduce_to_gain_event(scheme, self.alloc(), UNIT_THETA, both)
            assert ev.thresholds == (0.0, 0.0)

    def test_canoma_self_hit_reallocates_power(self):
        one_hit = ScenarioClass(True, False, True, False, False)
        ev = reduce_to_gain_event("canoma", self.alloc(), UNIT_THETA, one_hit)
        assert ev.thresholds == (0.0, pytest.approx(0.1))
        # conventional NOMA keeps both messages on the air
        ev = reduce_to_gain_event("noma", self.alloc(), UNIT_THETA, one_hit)
        assert ev.thresholds == (0.0, pytest.approx(1.0 / 6.0))
        # cache-aided OMA frees the slot, plain OMA wastes it
        ev = reduce_to_gain_event("oma-cache", self.alloc(), UNIT_THETA, one_hit)
        assert ev.thresholds == (0.0, pytest.approx(0.1))
        ev = reduce_to_gain_event("oma", self.alloc(), UNIT_THETA, one_hit)
        assert ev.thresholds == (0.0, pytest.approx(0.3))

    def test_idle_self_hit_power_keeps_position_share(self):
        one_hit = ScenarioClass(True, False, True, False, False)
        ev = reduce_to_gain_event(
            "canoma", self.alloc(), UNIT_THETA, one_hit, self_hit_power="idle"
        )
        assert ev.thresholds == (0.0, pytest.approx(0.125))

    def test_canoma_cross_cache_branches(self):
        # strong holds weak's file at alpha=0.4: skips the 0.5 SIC cut
        strong_cross = ScenarioClass(False, False, False, True, False)
        ev = reduce_to_gain_event("canoma", self.alloc(alpha=0.4), UNIT_THETA, strong_cross, (0, 1))
        assert ev.thresholds[0] == pytest.approx(0.25)
        assert ev.thresholds[1] == pytest.approx(0.5)
        # weak holds strong's file: interference-free own decode at P_w
        weak_cross = ScenarioClass(False, False, True, False, False)
        ev = reduce_to_gain_event("canoma", self.alloc(), UNIT_THETA, weak_cross, (0, 1))
        assert ev.thresholds[0] == pytest.approx(0.5)
        assert ev.thresholds[1] == pytest.approx(1.0 / 8.0)

    def test_ordering_maps_vehicle_flags_to_positions(self):
        one_hit = ScenarioClass(True, False, True, False, False)
        ev = reduce_to_gain_event("canoma", self.alloc(), UNIT_THETA, one_hit, (1, 0))
        assert ev.thresholds == (pytest.approx(0.1), 0.0)

    def test_per_file_overrides_unsupported_for_classes(self):
        th = DecodeThresholds(default=1.0, overrides=((2, 0.5),))
        with pytest.raises(OracleUnsupportedError):
            reduce_to_gain_event("noma", self.alloc(), th, NO_FLAGS)


class TestConditionalSuccessProb:
    def test_zero_thresholds_are_certain(self):
        ev = GainThresholdEvent((0.0, 0.0))
        assert conditional_success_prob(ev, (PAPER_LINK, PAPER_LINK)) == (1.0, 1.0, 1.0)

    def test_fixed_ordering_factorises(self):
        ev = GainThresholdEvent((0.5, 1.0 / 6.0))
        p1, p2, pj = conditional_success_prob(ev, (EXP_LINK, EXP_LINK), policy="fixed")
        assert p1 == pytest.approx(math.exp(-0.5), abs=1e-10)
        assert p2 == pytest.approx(math.exp(-1.0 / 6.0), abs=1e-10)
        assert pj == pytest.approx(math.exp(-2.0 / 3.0), abs=1e-10)

    def test_order_statistic_identity_at_equal_thresholds(self):
        ev = GainThresholdEvent((0.4, 0.4))
        g = product_gain_ccdf(PAPER_LINK, 0.4)
        _, _, pj = conditional_success_prob(ev, (PAPER_LINK, PAPER_LINK))
        assert pj == pytest.approx(g * g, abs=1e-12)

    def test_infeasible_component_contributes_zero(self):
        ev = GainThresholdEvent((INFEASIBLE, 0.2))
        p1, p2, pj = conditional_success_prob(ev, (EXP_LINK, EXP_LINK))
        assert p1 == 0.0
        assert pj == 0.0
        assert p2 == pytest.approx(math.exp(-0.4), abs=1e-10)

    def test_by_gain_needs_identical_links(self):
        other = LinkSpec.from_pairs([(2, 1)])
        with pytest.raises(OracleUnsupportedError):
            conditional_success_prob(GainThresholdEvent((0.1, 0.1)), (EXP_LINK, other))

    def test_matches_sorted_pair_frequencies(self):
        # a million i.i.d. pairs, sorted: empirical joint tail within 4
        # standard errors of the order-statistic formula
        rng = np.random.Generator(np.random.Philox(43))
        x1 = sample_link_gain(PAPER_LINK, rng, size=1_000_000)
        x2 = sample_link_gain(PAPER_LINK, rng, size=1_000_000)
        hi = np.maximum(x1, x2)
        lo = np.minimum(x1, x2)
        a, b = 0.9, 0.3
        p1, p2, pj = conditional_success_prob(
            GainThresholdEvent((a, b)), (PAPER_LINK, PAPER_LINK)
        )
        for p, freq in (
            (p1, (hi >= a).mean()),
            (p2, (lo >= b).mean()),
            (pj, ((hi >= a) & (lo >= b)).mean()),
        ):
            se = math.sqrt(p * (1 - p) / x1.size)
            assert abs(freq - p) <= 4 * se


class TestSuccessProb:
    def kwargs(self, **over):
        kw = dict(
            catalog_t=10,
            zeta=0.8,
            capacities=(2, 2),
            total=10.0,
            alpha=0.2,
            link_specs=(PAPER_LINK, PAPER_LINK),
        )
        kw.update(over)
        return kw

    def test_full_cache_saturates_every_scheme(self):
        for scheme in ("canoma", "noma", "oma-cache", "oma"):
            for total in (1.0, 10.0, 100.0):
                res = success_prob(scheme, **self.kwargs(capacities=(10, 10), total=total))
                assert res.p1 == res.p2 == res.p_joint == res.p_marg_product == 1.0

    def test_zero_cache_equates_cache_aided_and_conventional(self):
        a = success_prob("canoma", **self.kwargs(capacities=(0, 0)))
        b = success_prob("noma", **self.kwargs(capacities=(0, 0)))
        assert (a.p1, a.p2, a.p_joint) == (b.p1, b.p2, b.p_joint)
        a = success_prob("oma-cache", **self.kwargs(capacities=(0, 0)))
        b = success_prob("oma", **self.kwargs(capacities=(0, 0)))
        assert (a.p1, a.p2, a.p_joint) == (b.p1, b.p2, b.p_joint)

    def test_monotone_in_cache_size(self):
        vals = [
            success_prob("canoma", **self.kwargs(capacities=(c, c))).p_marg_product
            for c in range(0, 11, 2)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_monotone_in_catalog_size(self):
        vals = [
            success_prob("canoma", **self.kwargs(catalog_t=t)).p_marg_product
            for t in (10, 20, 50, 100)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_monotone_in_zeta(self):
        vals = [
            success_prob("canoma", **self.kwargs(zeta=z)).p_marg_product
            for z in (0.2, 0.4, 0.8, 1.6, 3.2)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_monotone_in_snr(self):
        vals = [
            success_prob("canoma", **self.kwargs(total=t)).p_marg_product
            for t in (1.0, 3.16, 10.0, 31.6, 100.0)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_monotone_in_threshold(self):
        vals = [
            success_prob(
                "noma", **self.kwargs(thresholds=DecodeThresholds(default=th))
            ).p_joint
            for th in (0.25, 0.5, 1.0, 2.0)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_weak_vehicle_infeasible_at_equal_split(self):
        res = success_prob("noma", **self.kwargs(capacities=(0, 0), alpha=0.5))
        assert res.p2 == 0.0
        assert res.p_joint == 0.0
        assert res.p_marg_product == 0.0

    def test_fixed_policy_supports_heterogeneous_links(self):
        res = success_prob(
            "noma",
            **self.kwargs(link_specs=(EXP_LINK, PAPER_LINK), policy="fixed"),
        )
        assert 0.0 < res.p_joint < 1.0

    def test_by_gain_rejects_heterogeneous_links(self):
        with pytest.raises(OracleUnsupportedError):
            success_prob("noma", **self.kwargs(link_specs=(EXP_LINK, PAPER_LINK)))

    def test_metric_selector(self):
        res = success_prob("canoma", **self.kwargs())
        assert res.value("joint") == res.p_joint
        assert res.value("marg-product") == res.p_marg_product
        with pytest.raises(ParameterError):
            res.value("median")
