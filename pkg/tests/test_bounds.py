"""Error components: frozen closed-form values, scaling laws, refinement."""

import numpy as np
import pytest

from levyq import (
    CertificationError,
    Deterministic,
    DiscreteDist,
    Erlang,
    GeneralMeasure,
    ModelKind,
    ModelSpec,
    OneJumpRefiner,
    Pareto,
    Uniform,
    jump_aggregation_error,
    jump_aggregation_refined,
    jump_cut_error_mg1,
    jump_cut_error_specneg,
    solve,
    step_bound,
    truncation_error_mg1,
    truncation_error_specneg,
)
from levyq.bounds import BoundContext

REF_MG1 = ModelSpec(ModelKind.MG1, 0.25, Uniform(1.0, 5.0))


class TestJumpAggregationBasic:
    def test_frozen_value(self):
        # lam = 1/4, delta = 1/500, evaluated at 40-digit precision
        assert jump_aggregation_error(0.25, 1 / 500) == pytest.approx(
            9.995001249791692705729383665055532e-7, rel=1e-13
        )

    def test_leading_order(self):
        lam = 0.7
        for d in [1e-3, 1e-4, 1e-5]:
            assert jump_aggregation_error(lam, d) / d**2 == pytest.approx(
                lam, rel=2 * lam * d
            )

    def test_vanishes_with_rate(self):
        assert jump_aggregation_error(1e-300, 0.1) == pytest.approx(0.0, abs=1e-280)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            jump_aggregation_error(0.0, 0.1)


class TestJumpCut:
    def test_mg1_frozen_value(self):
        assert jump_cut_error_mg1(0.25, 1 / 500, 3.0) == pytest.approx(
            7.498125312460941405924502416701e-7, rel=1e-13
        )

    def test_mg1_quadratic_scaling(self):
        vals = [jump_cut_error_mg1(0.25, d, 3.0) for d in (1e-2, 5e-3, 2.5e-3)]
        assert vals[0] / vals[1] == pytest.approx(4.0, rel=1e-2)
        assert vals[1] / vals[2] == pytest.approx(4.0, rel=1e-2)

    def test_mg1_zero_mean(self):
        assert jump_cut_error_mg1(0.5, 0.1, 0.0) == 0.0

    def test_mg1_requires_mean(self):
        with pytest.raises(CertificationError):
            jump_cut_error_mg1(0.5, 0.1, None)

    def test_specneg_frozen_branches(self):
        # lam = 1/3, delta = 1/100, M = 55, E[B] = 3: first branch is smaller
        value = jump_cut_error_specneg(1 / 3, 1 / 100, 3.0, 55.0)
        branch1 = 3.327783945476678479797272018278e-5
        branch2 = 3.049328234743234508934268378913e-4
        assert value == pytest.approx(branch1, rel=1e-13)
        assert value < branch2

    def test_specneg_without_mean_takes_capped_branch(self):
        capped = jump_cut_error_specneg(1 / 3, 1 / 100, None, 55.0)
        assert capped == pytest.approx(3.049328234743234508934268378913e-4, rel=1e-12)

    def test_specneg_quadratic_scaling(self):
        for mean_b in (3.0, None):
            vals = [
                jump_cut_error_specneg(0.25, d, mean_b, 10.0)
                for d in (1e-2, 5e-3, 2.5e-3)
            ]
            assert vals[0] / vals[1] == pytest.approx(4.0, rel=2e-2)


class TestTruncation:
    def test_mg1_zero_beyond_support(self):
        grid = REF_MG1.grid_for(0.5, 100)  # M = 50
        for i in range(0, 80):  # M - i*d >= 10 > sup support
            assert truncation_error_mg1(0.25, 0.5, i, grid, REF_MG1.job) == 0.0

    def test_mg1_top_state_full_mean(self):
        grid = REF_MG1.grid_for(0.5, 100)
        v = truncation_error_mg1(0.25, 0.5, 100, grid, REF_MG1.job)
        expected = 0.25 * 0.5 * np.exp(-0.125) * 3.0
        assert v == pytest.approx(expected, rel=1e-13)

    def test_mg1_uniform_tail_value(self):
        # M - i*d = 3: tail integral of x over (3, 5] at density 1/4 is 2
        grid = REF_MG1.grid_for(0.5, 100)
        i = 94  # 50 - 47 = 3
        v = truncation_error_mg1(0.25, 0.5, i, grid, REF_MG1.job)
        assert v == pytest.approx(0.25 * 0.5 * np.exp(-0.125) * 2.0, rel=1e-12)

    def test_specneg_only_top_interval(self):
        spec = ModelSpec(ModelKind.SPECTRALLY_NEGATIVE, 0.5, Pareto(1.0, 1.5))
        grid = spec.grid_for(0.1, 50)
        for i in range(1, 50):
            assert truncation_error_specneg(0.5, 0.1, i, grid) == 0.0
        top = truncation_error_specneg(0.5, 0.1, 50, grid)
        assert top == pytest.approx(0.1 * np.exp(-0.05), rel=1e-13)
        assert top <= 0.1

    def test_specneg_zero_rate_limit(self):
        spec = ModelSpec(ModelKind.SPECTRALLY_NEGATIVE, 1.0, Pareto(1.0, 1.5))
        grid = spec.grid_for(0.1, 50)
        assert truncation_error_specneg(1e-14, 0.1, 50, grid) == pytest.approx(
            0.1, rel=1e-12
        )


class TestMonotoneInRate:
    def test_all_components_nondecreasing(self):
        d = 0.01
        lams = np.linspace(1e-3, 1.0 / d, 60)
        agg = [jump_aggregation_error(l, d) for l in lams]
        cut = [jump_cut_error_mg1(l, d, 3.0) for l in lams]
        cut_sn = [jump_cut_error_specneg(l, d, 3.0, 20.0) for l in lams]
        grid = REF_MG1.grid_for(d, 2000)
        trunc = [truncation_error_mg1(l, d, 2000, grid, REF_MG1.job) for l in lams]
        for seq in (agg, cut, cut_sn, trunc):
            assert np.all(np.diff(seq) >= -1e-15)


def oracle_mixture_wd(spec, grid, p, fine=256):
    """Independent sub-grid evaluation of the one-jump mixture deviation."""
    d, n = grid.delta, grid.m_delta
    J = spec.job.prefix_cdf
    K = spec.job.prefix_x_cdf
    ys = np.linspace(0, grid.m, n * fine + 1)
    G = np.zeros_like(ys)
    if spec.kind is ModelKind.MG1:
        G += p[0] * (J(ys + d) - J(ys)) / d
        G += p[1] * (2 / d**2) * (
            (ys + d) * (J(ys + d) - J(ys)) - (K(ys + d) - K(ys))
        )
        for i in range(2, n + 1):
            if p[i] == 0:
                continue
            G += p[i] * (J(ys - (i - 2) * d) - J(ys - (i - 1) * d)) / d
    else:
        for i in range(1, n + 1):
            if p[i - 1] == 0:
                continue
            G += (
                p[i - 1]
                * np.minimum(1.0, ys / d)
                * (1.0 - (J((i + 1) * d - ys) - J(i * d - ys)) / d)
            )
    H = np.interp(ys, ys[::fine], G[::fine])
    return float(np.trapezoid(np.abs(G - H), ys))


class TestRefined:
    CASES = [
        (ModelSpec(ModelKind.MG1, 0.25, Uniform(1.0, 5.0)), (0.5, 30)),
        (ModelSpec(ModelKind.MG1, 0.4, Erlang(6, 2.0)), (0.2, 40)),
        (ModelSpec(ModelKind.SPECTRALLY_NEGATIVE, 1 / 3, Pareto(1.0, 1.5)), (0.25, 40)),
        (ModelSpec(ModelKind.SPECTRALLY_NEGATIVE, 0.5, Uniform(0.3, 2.2)), (0.2, 30)),
    ]

    def test_certified_against_subgrid_oracle(self):
        rng = np.random.default_rng(11)
        for spec, args in self.CASES:
            grid = spec.grid_for(*args)
            for _ in range(3):
                p = rng.random(grid.n_states)
                p /= p.sum()
                dist = DiscreteDist(grid, p)
                term = OneJumpRefiner(spec, grid, "per_step").term(dist)
                scale = spec.lam * grid.delta * np.exp(-spec.lam * grid.delta)
                oracle = oracle_mixture_wd(spec, grid, p)
                # certified: value + slack covers the truth
                assert term.value + term.slack >= scale * oracle - 1e-13
                # and tracks it: the value does not exceed truth + slack
                assert term.value <= scale * oracle + term.slack + 1e-13

    def test_point_mass_initial_distribution(self):
        # one-hot from a point mass at 1, coarse grid for oracle speed
        grid = REF_MG1.grid_for(0.1, 200)
        p = np.zeros(201)
        p[10] = 1.0
        dist = DiscreteDist(grid, p)
        term = OneJumpRefiner(REF_MG1, grid, "per_step").term(dist)
        scale = 0.25 * 0.1 * np.exp(-0.025)
        oracle = oracle_mixture_wd(REF_MG1, grid, p, fine=256)
        assert term.value + term.slack >= scale * oracle - 1e-14
        assert term.value <= scale * (oracle + 0.02 * oracle) + term.slack

    def test_grid_aligned_deterministic_jobs_vanish(self):
        # job size a multiple of delta: the one-jump law is exactly uniform
        # on single intervals, so the refined term is 0 for interior states
        spec = ModelSpec(ModelKind.MG1, 0.25, Deterministic(2.0))
        grid = spec.grid_for(0.5, 30)
        p = np.zeros(31)
        p[10] = 1.0
        term = OneJumpRefiner(spec, grid, "per_step").term(DiscreteDist(grid, p))
        assert term.value == pytest.approx(0.0, abs=1e-15)

    def test_refined_below_basic_plus_slack(self):
        rng = np.random.default_rng(12)
        for spec, args in self.CASES:
            grid = spec.grid_for(*args)
            basic = jump_aggregation_error(spec.lam, grid.delta)
            for weighting in ("per_step", "per_interval"):
                refiner = OneJumpRefiner(spec, grid, weighting)
                for _ in range(3):
                    p = rng.random(grid.n_states)
                    p /= p.sum()
                    term = refiner.term(DiscreteDist(grid, p))
                    assert term.value <= basic + 1e-15

    def test_per_interval_dominates_mixture(self):
        # the cheap mode is an upper bound of the per-step mixture value
        rng = np.random.default_rng(13)
        for spec, args in self.CASES:
            grid = spec.grid_for(*args)
            mix = OneJumpRefiner(spec, grid, "per_step")
            cheap = OneJumpRefiner(spec, grid, "per_interval")
            for _ in range(3):
                p = rng.random(grid.n_states)
                p /= p.sum()
                dist = DiscreteDist(grid, p)
                t_mix = mix.term(dist)
                t_cheap = cheap.term(dist)
                assert t_cheap.value + t_cheap.slack >= t_mix.value - t_mix.slack - 1e-14

    def test_module_level_helper(self):
        grid = REF_MG1.grid_for(0.5, 30)
        p = np.ones(31) / 31
        dist = DiscreteDist(grid, p)
        total = jump_aggregation_refined(REF_MG1, grid, dist)
        basic = jump_aggregation_error(0.25, 0.5)
        term = OneJumpRefiner(REF_MG1, grid).term(dist)
        assert total == pytest.approx(term.value + term.slack, rel=1e-12)
        assert total <= basic + term.slack

    def test_custom_cdf_rejected(self):
        from levyq import CustomCdf

        job = CustomCdf(Uniform(1.0, 5.0).cdf, support_hi=5.0)
        spec = ModelSpec(ModelKind.MG1, 0.25, job)
        grid = spec.grid_for(0.5, 20)
        with pytest.raises(CertificationError):
            OneJumpRefiner(spec, grid)


class TestStepBound:
    def test_zero_rate_limit_mg1(self):
        spec = ModelSpec(ModelKind.MG1, 1e-12, Uniform(1.0, 5.0))
        grid = spec.grid_for(0.5, 100)
        p = np.ones(101) / 101
        comp = step_bound(spec, grid, DiscreteDist(grid, p))
        assert comp.total < 1e-11

    def test_interior_mass_has_no_truncation_term(self):
        spec = ModelSpec(ModelKind.MG1, 0.4, Uniform(1.0, 3.0))
        grid = spec.grid_for(0.25, 80)
        p = np.zeros(81)
        p[10] = 1.0
        comp = step_bound(spec, grid, DiscreteDist(grid, p))
        assert comp.truncation_weighted == 0.0
        assert comp.jump_aggregation == pytest.approx(
            jump_aggregation_error(0.4, 0.25), rel=1e-14
        )
        assert comp.jump_cut == pytest.approx(
            jump_cut_error_mg1(0.4, 0.25, 2.0), rel=1e-14
        )

    def test_specneg_top_state_truncation(self):
        spec = ModelSpec(ModelKind.SPECTRALLY_NEGATIVE, 0.5, Pareto(1.0, 1.5))
        grid = spec.grid_for(0.1, 50)
        p = np.zeros(50)
        p[-1] = 1.0
        comp = step_bound(spec, grid, DiscreteDist(grid, p))
        assert comp.truncation_weighted == pytest.approx(
            0.1 * np.exp(-0.05), rel=1e-13
        )

    def test_mean_required_for_mg1(self):
        spec = ModelSpec(ModelKind.MG1, 0.5, Pareto(1.0, 0.9))
        grid = spec.grid_for(0.25, 20)
        with pytest.raises(CertificationError):
            step_bound(spec, grid, DiscreteDist(grid, np.ones(21) / 21))

    def test_specneg_heavy_tail_allowed(self):
        spec = ModelSpec(ModelKind.SPECTRALLY_NEGATIVE, 0.5, Pareto(1.0, 0.9))
        grid = spec.grid_for(0.25, 20)
        comp = step_bound(spec, grid, DiscreteDist(grid, np.ones(20) / 20))
        assert comp.total > 0.0


class TestScalingLaws:
    def test_per_step_order_delta_squared(self):
        # away from truncation, step components shrink like delta^2
        ratios = []
        prev = None
        for m_delta, d in [(50 * 4, 1 / 50), (100 * 4, 1 / 100), (200 * 4, 1 / 200),
                           (400 * 4, 1 / 400)]:
            grid = REF_MG1.grid_for(d, m_delta)  # M = 4 fixed
            p = np.zeros(grid.n_states)
            p[1] = 1.0
            ctx = BoundContext(REF_MG1, grid, refined=False)
            comp = ctx.components(DiscreteDist(grid, p))
            scaled = (comp.jump_aggregation + comp.jump_cut) / d**2
            if prev is not None:
                ratios.append(scaled / prev)
            prev = scaled
        assert all(0.5 < r < 2.0 for r in ratios)

    def test_cumulative_order_delta_at_fixed_horizon(self):
        # halving delta roughly halves the bound at t = 1 (truncation excluded)
        mu0 = GeneralMeasure.dirac(1.0)
        totals = []
        for d_inv in (50, 100, 200):
            grid = REF_MG1.grid_for(1 / d_inv, 10 * d_inv)  # M = 10
            res = solve(REF_MG1, grid, mu0, d_inv, bound_mode="refined")
            totals.append(res.ledger.cumulative_excluding_truncation()[-1])
        for hi, lo in zip(totals, totals[1:]):
            assert 1.7 <= hi / lo <= 2.3
