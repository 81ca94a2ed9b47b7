import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_scalar, random_vector
from nlcflow.diagnostics import (
    NormSeries,
    check_energy_dissipation,
    check_interpolation,
    check_l1_bound,
    check_lp_dissipation,
    check_shell_split,
    fd_gradient_sq,
    fit_decay,
    fit_power_law,
    interpolation_sweep,
    lp_dissipation_constant,
    p_label,
    random_mean_free_field,
    record,
    series_columns,
    shell_split_sweep,
    theoretical_exponents,
)
from nlcflow.heat import exact_heat
from nlcflow.initial import Bump, InitSpec, gaussian_bump, gen_director
from nlcflow.model import FlowState, Integrator, ModelParams, recover_pressure
from nlcflow.runner import run
from nlcflow.spectral import Grid, ScalarField, VectorField3, leray_project, sobolev_seminorm

TWO_PI = 2 * math.pi


def series_from(columns: dict) -> NormSeries:
    s = NormSeries(list(columns))
    n = len(next(iter(columns.values())))
    for i in range(n):
        s.append({k: v[i] for k, v in columns.items()})
    return s


def heat_director_states(grid, times, amplitude=0.05, width=1.5):
    """Pure-heat evolution of a single-component Gaussian director (sign-definite, so |n| is smooth)."""
    n0 = np.zeros((3,) + grid.shape)
    n0[0] = amplitude * gaussian_bump(grid, (grid.L / 2,) * 3, width)
    v = VectorField3.from_array(grid, n0)
    zero = VectorField3.zeros(grid)
    return [FlowState(t, zero, exact_heat(v, t)) for t in times]


class TestSeries:
    def test_column_layout(self):
        for K in range(4):
            for ps in [(1.0, 2.0, 4.0), (2.0,), ()]:
                cols = series_columns(K, ps)
                assert len(cols) == 1 + (K + 1) + (K + 2) + len(ps) + 2 * K + K + 1
                assert cols[0] == "t" and cols[-1] == "cum_dissipation"
        assert series_columns(1, (1.0, 4.0, math.inf))[6:9] == ["lp_n_p1", "lp_n_p4", "lp_n_pinf"]
        assert p_label(2.5) == "2.5"

    def test_append_validation(self):
        s = NormSeries(["t", "a"])
        s.append({"t": 0.0, "a": 1.0})
        with pytest.raises(ValueError):
            s.append({"t": 0.0, "a": 1.0})
        with pytest.raises(ValueError):
            s.append({"t": 1.0, "a": -1.0})
        with pytest.raises(ValueError):
            s.append({"t": 1.0, "a": math.nan})
        with pytest.raises(KeyError):
            s.append({"t": 1.0})
        with pytest.raises(KeyError):
            s.column("b")
        with pytest.raises(ValueError):
            NormSeries(["a", "t"])
        assert len(s) == 1 and "a" in s and list(s.rows()) == [{"t": 0.0, "a": 1.0}]


class TestRecord:
    def test_zero_state(self):
        g = Grid(16, TWO_PI)
        row = record(FlowState.zeros(g), ModelParams())
        assert set(row) == set(series_columns(2))
        assert all(v == 0 for v in row.values())

    def test_heat_identity(self):
        g = Grid(16, TWO_PI)
        n = np.zeros((3,) + g.shape)
        n[1] = 0.3 * np.sin(2 * g.coords)[None, :, None]
        row = record(FlowState.from_arrays(g, 0.0, np.zeros_like(n), n), ModelParams(nonlinear=False))
        assert row["norm_nt_k0"] == pytest.approx(4 * row["norm_n_m0"], rel=1e-13)
        assert row["norm_gradP_k0"] == 0

    def test_time_derivatives_match_trajectory(self):
        g = Grid(16, TWO_PI)
        rng = np.random.default_rng(0)
        c = np.zeros((3,) + g.shape, complex)
        for a in range(3):
            for m in [(1, 0, 0), (0, 1, 1), (1, 2, 0), (0, 0, 2)]:
                c[(a,) + m] = rng.normal() + 1j * rng.normal()
        u = np.fft.ifftn(c + np.conj(np.roll(np.flip(c, axis=(1, 2, 3)), 1, axis=(1, 2, 3))), axes=(1, 2, 3)).real
        u = leray_project(VectorField3.from_array(g, 0.5 * u / np.abs(u).max())).values()
        spec = InitSpec(seed=1, bumps=(Bump((math.pi,) * 3, 0.7),), delta0=0.5)
        n = gen_director(spec, g)
        params = ModelParams(dt=1e-4)
        integ = Integrator(g, params)
        uh, nh = integ.to_spectral(FlowState.from_arrays(g, 0.0, u, n.array))
        h_steps = 20
        traj = []
        for j in range(2 * h_steps + 1):
            traj.append((uh, nh))
            uh, nh, _ = integ.step(uh, nh)
        h = h_steps * params.dt
        mid = integ.to_state(h, *traj[h_steps])
        row = record(mid, params, K_max=1)
        hs = integ.hs
        du = (traj[-1][0] - traj[0][0]) / (2 * h)
        dn = (traj[-1][1] - traj[0][1]) / (2 * h)
        assert row["norm_ut_k0"] == pytest.approx(math.sqrt(hs.seminorm_sq(du, 0)), rel=1e-3)
        assert row["norm_nt_k0"] == pytest.approx(math.sqrt(hs.seminorm_sq(dn, 0)), rel=1e-3)
        assert row["norm_gradP_k0"] == pytest.approx(sobolev_seminorm(recover_pressure(mid), 1), rel=1e-12)
        assert row["norm_gradP_k0"] > 0


class TestEnergy:
    def test_zero_series(self):
        s = series_from({"t": [0, 1, 2], "norm_n_m0": [0, 0, 0]})
        rep = check_energy_dissipation(s, "l2_director")
        assert rep.passed and rep.worst_slack == 0

    def test_increase_detected(self):
        s = series_from({"t": [0, 1, 2], "norm_n_m0": [1.0, 0.9, 0.9 * (1 + 1e-7)]})
        rep = check_energy_dissipation(s, "l2_director")
        assert not rep.passed and rep.worst_slack < 0
        assert rep.line().startswith("FAIL")

    def test_tolerance_is_relative(self):
        s = series_from({"t": [0, 1], "norm_n_m0": [1.0, math.sqrt(1 + 5e-9)]})
        assert check_energy_dissipation(s, "l2_director").passed

    def test_modes(self):
        cols = {"t": [0, 1], "norm_u_k0": [1, 1], "norm_u_k1": [2, 1], "norm_n_m0": [1, 1], "norm_n_m1": [1, 1], "norm_n_m2": [3, 1]}
        s = series_from(cols)
        assert check_energy_dissipation(s, "level_k", 1).passed
        assert check_energy_dissipation(s, "full_h_m", 1).passed
        with pytest.raises(ValueError):
            check_energy_dissipation(s, "h1")

    def test_pure_heat_run_strictly_decreasing(self):
        g = Grid(16, 8 * math.pi)
        spec = InitSpec(seed=2, bumps=(Bump((4 * math.pi,) * 3, 2.0),))
        from nlcflow.initial import gen_velocity

        s0 = FlowState(0.0, gen_velocity(spec, g), gen_director(spec, g))
        res = run(s0, ModelParams(dt=0.05, t_end=1.0, nonlinear=False), 0.1)
        for mode in ("l2_director", "level_k", "full_h_m"):
            assert check_energy_dissipation(res.steps, mode, 1).passed
        e = res.steps.column("norm_n_m0")
        assert np.all(np.diff(e) < 0)


class TestLp:
    def test_constant(self):
        assert lp_dissipation_constant(2) == 1.0
        assert lp_dissipation_constant(4) == pytest.approx(2.5)

    def test_zero_director(self):
        g = Grid(16, TWO_PI)
        rep = check_lp_dissipation((FlowState.zeros(g, 0.0), FlowState.zeros(g, 0.1)), 4)
        assert rep.passed and rep.lhs == 0 and rep.tol == 0

    def test_argument_checks(self):
        g = Grid(16, TWO_PI)
        with pytest.raises(ValueError):
            check_lp_dissipation((FlowState.zeros(g, 0.0), FlowState.zeros(g, 0.1)), 1.5)
        with pytest.raises(ValueError):
            check_lp_dissipation((FlowState.zeros(g, 0.1), FlowState.zeros(g, 0.1)), 2)

    def test_fd_gradient_is_fourth_order(self):
        errs = []
        for N in (16, 32):
            g = Grid(N, TWO_PI)
            f = np.sin(g.coords)[:, None, None] + np.zeros(g.shape)
            exact = np.cos(g.coords)[:, None, None] ** 2 + np.zeros(g.shape)
            errs.append(np.abs(fd_gradient_sq(f, g.dx) - exact).max())
        assert 3.8 <= math.log2(errs[0] / errs[1]) <= 4.2

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_pure_heat_passes(self, p):
        g = Grid(32, 8 * math.pi)
        a, b = heat_director_states(g, (1.0, 1.01))
        assert check_lp_dissipation((a, b), p).passed

    def test_p2_agrees_with_spectral_dissipation(self):
        # for sign-definite single-component n, |grad |n||^2 = |grad n|^2 and the two gradients agree
        g = Grid(64, 8 * math.pi)
        a, b = heat_director_states(g, (5.0, 5.001), width=2.0)
        rep = check_lp_dissipation((a, b), 2)
        spectral = 0.5 * (sobolev_seminorm(a.n, 1) ** 2 + sobolev_seminorm(b.n, 1) ** 2)
        assert rep.dissipation == pytest.approx(spectral, rel=1e-4)
        # and the rate is the L2 energy rate: d/dt ||n||^2 = -2 ||grad n||^2 under heat flow
        assert rep.rate == pytest.approx(-2 * spectral, rel=1e-4)


class TestL1:
    def test_zero_run(self):
        s = series_from({"t": [0, 1], "lp_n_p1": [0, 0], "cum_dissipation": [0, 0]})
        assert check_l1_bound(s).passed

    def test_violation(self):
        s = series_from({"t": [0, 1], "lp_n_p1": [1.0, 1.1], "cum_dissipation": [0, 0.05]})
        rep = check_l1_bound(s)
        assert not rep.passed and rep.worst_slack == pytest.approx(-0.05 + 1e-6)

    def test_pure_heat_bump(self):
        g = Grid(32, 8 * math.pi)
        spec = InitSpec(seed=0, bumps=(Bump((4 * math.pi,) * 3, 2.0),))
        s0 = FlowState(0.0, VectorField3.zeros(g), gen_director(spec, g))
        res = run(s0, ModelParams(dt=0.05, t_end=2.0, nonlinear=False), 0.1)
        assert check_l1_bound(res.series).passed
        l1 = res.series.column("lp_n_p1")
        assert np.all(np.diff(l1) <= 1e-15 * l1[0])


class TestShellSplit:
    def test_single_mode_example(self):
        g = Grid(16, TWO_PI)
        f = ScalarField(g, np.sin(g.coords)[:, None, None] + np.zeros(g.shape))
        E = sobolev_seminorm(f, 0) ** 2
        rep = check_shell_split(f, 1, 3.0, 0.0)
        assert rep.lhs == pytest.approx(E, rel=1e-14)
        assert rep.rhs == pytest.approx(-6 * E, rel=1e-14)
        assert rep.slack == pytest.approx(7 * E, rel=1e-14)

    def test_zero_field(self):
        rep = check_shell_split(ScalarField.zeros(Grid(8, 1.0)), 2, 1.0, 3.0)
        assert rep.slack == 0 and rep.passed

    def test_argument_checks(self):
        f = ScalarField.zeros(Grid(8, 1.0))
        for args in [(0, 1.0, 0.0), (1, 0.0, 0.0), (1, 1.0, -1.0)]:
            with pytest.raises(ValueError):
                check_shell_split(f, *args)

    @given(st.integers(1, 3), st.floats(1e-6, 10.0), st.floats(0.0, 100.0), st.integers(0, 2**31))
    def test_property(self, j, R, t, seed):
        f = random_vector(Grid(8, 7.0), seed, slope=1.0)
        rep = check_shell_split(f, j, R, t)
        assert rep.slack >= -1e-12 * rep.lhs

    def test_sweep(self):
        rep = shell_split_sweep(50, seed=1)
        assert rep.passed and rep.checked == 50


class TestFits:
    def test_exact_power_law(self):
        t = np.linspace(1, 100, 200)
        fit = fit_power_law(t, 10 * (1 + t) ** -0.75, (1, 100))
        assert fit.exponent == pytest.approx(-0.75, abs=1e-6)
        assert fit.slope == pytest.approx(-1.5, abs=2e-6)
        assert fit.r_squared > 0.999999

    def test_exponential_is_not_a_power_law(self):
        t = np.linspace(1, 10, 50)
        fit = fit_power_law(t, np.exp(-t), (1, 10))
        assert fit.r_squared < 0.999

    def test_heat_gaussian_rate(self):
        g = Grid(64, 32 * math.pi)
        f = ScalarField(g, gaussian_bump(g, (g.L / 2,) * 3, 2.0)).to_spectral()
        t1 = 0.5 * (g.L / TWO_PI) ** 2
        ts = np.linspace(5, t1, 30)
        vals = [sobolev_seminorm(exact_heat(f, s), 0) for s in ts]
        fit = fit_power_law(ts, np.array(vals), (5, t1))
        assert fit.exponent == pytest.approx(-0.75, abs=0.1)

    def test_errors(self):
        t = np.arange(20.0)
        with pytest.raises(ValueError):
            fit_power_law(t, np.ones(20), (5, 5))
        with pytest.raises(ValueError):
            fit_power_law(t, np.ones(20), (0, 5))  # 6 rows
        with pytest.raises(ValueError):
            fit_power_law(t, np.zeros(20), (0, 19))

    def test_fit_decay_uses_column(self):
        t = np.linspace(0, 50, 51)
        s = series_from({"t": t, "q": 2 * (1 + t) ** -1.25})
        assert fit_decay(s, "q", (5, 50)).exponent == pytest.approx(-1.25, abs=1e-9)

    def test_theoretical_exponents(self):
        th = theoretical_exponents(2)
        assert th["norm_u_k0"] == -0.75 and th["norm_n_m1"] == -1.25
        assert th["lp_n_p4"] == -9 / 8 and "lp_n_p1" not in th
        assert th["norm_nt_k0"] == th["norm_ut_k0"] == th["norm_gradP_k0"] == -1.75


class TestInterpolation:
    def test_single_mode_equality(self):
        g = Grid(16, TWO_PI)
        f = ScalarField(g, np.sin(3 * g.coords)[None, :, None] + np.zeros(g.shape))
        assert check_interpolation(f, 1.3, 2.7).ratio == pytest.approx(1.0, abs=1e-14)

    def test_degenerate_cases(self):
        g = Grid(8, 1.0)
        f = random_scalar(g, 0, mean_free=True)
        assert check_interpolation(f, 0.0, 2.0).ratio == 1.0
        assert check_interpolation(ScalarField.zeros(g), 1.0, 2.0).ratio == 1.0
        with pytest.raises(ValueError):
            check_interpolation(f, 2.0, 1.0)
        with pytest.raises(ValueError):
            check_interpolation(f, -1.0, 1.0)

    @given(st.floats(0.0, 4.0), st.floats(0.01, 4.0), st.integers(0, 2**31))
    def test_property(self, s, l, seed):
        s = min(s, l)
        rng = np.random.default_rng(seed)
        f = random_mean_free_field(Grid(8, float(rng.uniform(1, 20))), rng, vector=bool(seed % 2))
        assert check_interpolation(f, s, l).passed

    def test_sweep(self):
        assert interpolation_sweep(50, seed=2).passed
