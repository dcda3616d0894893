"""Product-market tests: choice masses, the excess-supply map, starts."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import brentq

from marketclear import (
    HedonicMarket,
    PriceVector,
    SolverOptions,
    build_hedonic_map,
    check_inverse_isotone,
    demand,
    is_subsolution,
    is_supersolution,
    solve,
    supply,
    uniform_subsolution,
    uniform_supersolution,
)
from conftest import labels, random_hedonic_market


def symmetric_market(rng: np.random.Generator, count: int = 3, nz: int = 4):
    """Mirror market: tastes are the negated costs, masses agree."""
    n = rng.uniform(0.5, 2.0, count)
    c = rng.uniform(-1.0, 1.0, (count, nz))
    return HedonicMarket(
        x_labels=labels("x", count),
        y_labels=labels("y", count),
        z_labels=labels("z", nz),
        n=n,
        m=n.copy(),
        c=c,
        a=-c,
    )


class TestMarketValidation:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            HedonicMarket(("x1",), ("y1",), ("z1", "z2"), [1.0], [1.0],
                          c=[[0.0]], a=[[0.0, 0.0]])

    def test_nonpositive_mass(self):
        with pytest.raises(ValueError):
            HedonicMarket(("x1",), ("y1",), ("z1",), [0.0], [1.0],
                          c=[[0.0]], a=[[0.0]])

    def test_duplicate_variety_labels(self):
        with pytest.raises(ValueError):
            HedonicMarket(("x1",), ("y1",), ("z1", "z1"), [1.0], [1.0],
                          c=[[0.0, 0.0]], a=[[0.0, 0.0]])

    def test_nonfinite_tastes(self):
        with pytest.raises(ValueError):
            HedonicMarket(("x1",), ("y1",), ("z1",), [1.0], [1.0],
                          c=[[0.0]], a=[[np.inf]])


class TestChoiceMasses:
    def test_single_cell_closed_form(self):
        market = HedonicMarket(("x1",), ("y1",), ("z1",), [1.0], [1.0],
                               c=[[0.0]], a=[[0.0]])
        p = PriceVector(("z1",), np.array([0.0]))
        assert supply(market, p) == np.array([0.5])
        assert demand(market, p) == np.array([0.5])

    def test_outside_options_keep_totals_strict(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng)
        p = PriceVector(market.z_labels, rng.uniform(-1.0, 1.0, 4))
        assert supply(market, p).sum() < market.n.sum()
        assert demand(market, p).sum() < market.m.sum()

    def test_extreme_prices_saturate(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng)
        high = PriceVector(market.z_labels, np.full(4, 40.0))
        assert supply(market, high).sum() == pytest.approx(
            market.n.sum(), rel=1e-10
        )
        assert demand(market, high).sum() == pytest.approx(0.0, abs=1e-10)

    def test_label_mismatch_rejected(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng)
        p = PriceVector(market.x_labels, np.zeros(len(market.x_labels)))
        with pytest.raises(ValueError):
            supply(market, p)
        with pytest.raises(ValueError):
            demand(market, p)

    def test_supply_rises_and_demand_falls_in_own_price(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng)
        base = rng.uniform(-1.0, 1.0, 4)
        bumped = base.copy()
        bumped[2] += 0.5
        p0 = PriceVector(market.z_labels, base)
        p1 = PriceVector(market.z_labels, bumped)
        assert supply(market, p1)[2] > supply(market, p0)[2]
        assert demand(market, p1)[2] < demand(market, p0)[2]


class TestHedonicMap:
    def test_mirror_market_clears_at_zero(self):
        rng = np.random.default_rng(42)
        market = symmetric_market(rng)
        q = build_hedonic_map(market)
        zero = PriceVector(market.z_labels, np.zeros(len(market.z_labels)))
        assert np.array_equal(q.evaluate(zero).values, np.zeros(4))
        p, _ = solve(
            q, uniform_supersolution(market), SolverOptions(residual_tol=1e-11)
        )
        assert_allclose(p.values, np.zeros(4), atol=1e-8)

    def test_single_variety_against_scalar_root(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng, nx=4, ny=3, nz=1)
        q = build_hedonic_map(market)

        def excess(t: float) -> float:
            return float(q.eval_values(np.array([t]))[0])

        root = brentq(excess, -40.0, 40.0, xtol=1e-13)
        p, _ = solve(
            q, uniform_supersolution(market), SolverOptions(residual_tol=1e-11)
        )
        assert p.values[0] == pytest.approx(root, abs=1e-8)

    def test_start_constructors_are_one_signed(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            market = random_hedonic_market(rng)
            q = build_hedonic_map(market)
            assert is_supersolution(q, uniform_supersolution(market))
            assert is_subsolution(q, uniform_subsolution(market))

    def test_limits_from_both_sides_agree(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng)
        q = build_hedonic_map(market)
        opts = SolverOptions(residual_tol=1e-11)
        from_above, trace_down = solve(q, uniform_supersolution(market), opts)
        from_below, trace_up = solve(q, uniform_subsolution(market), opts)
        assert_allclose(from_above.values, from_below.values, atol=1e-8)
        down = np.array([r.prices.values for r in trace_down.records])
        up = np.array([r.prices.values for r in trace_up.records])
        assert np.all(np.diff(down, axis=0) <= 1e-12)
        assert np.all(np.diff(up, axis=0) >= -1e-12)

    def test_modes_agree(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng)
        q = build_hedonic_map(market)
        start = uniform_supersolution(market)
        ja, _ = solve(q, start, SolverOptions(residual_tol=1e-11))
        gs, _ = solve(
            q, start, SolverOptions(residual_tol=1e-11, mode="gauss_seidel")
        )
        assert_allclose(ja.values, gs.values, atol=1e-8)

    def test_inverse_isotone_in_samples(self):
        rng = np.random.default_rng(42)
        market = random_hedonic_market(rng, nx=2, ny=2, nz=3)
        q = build_hedonic_map(market)
        report = check_inverse_isotone(q, 300, rng_seed=42)
        assert report.comparable > 0
        assert report.violations == ()
