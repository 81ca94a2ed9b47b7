"""Monitored norms, discrete versions of the energy inequalities, and decay fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .model import FlowState, Integrator, ModelParams, recover_pressure
from .spectral import Field, Grid, ScalarField, VectorField3, lp_norm, sobolev_seminorm

DEFAULT_P_LIST = (1.0, 2.0, 4.0)


def p_label(p: float) -> str:
    if math.isinf(p):
        return "inf"
    return str(int(p)) if float(p).is_integer() else repr(float(p))


def series_columns(K_max: int, p_list: Sequence[float] = DEFAULT_P_LIST) -> list[str]:
    """Canonical column order of a full :class:`NormSeries`."""
    cols = ["t"]
    cols += [f"norm_u_k{k}" for k in range(K_max + 1)]
    cols += [f"norm_n_m{m}" for m in range(K_max + 2)]
    cols += [f"lp_n_p{p_label(p)}" for p in p_list]
    cols += [f"norm_nt_k{k}" for k in range(K_max)]
    cols += [f"norm_ut_k{k}" for k in range(K_max)]
    cols += [f"norm_gradP_k{k}" for k in range(K_max)]
    cols.append("cum_dissipation")
    return cols


@dataclass
class NormSeries:
    """Time-indexed table of monitored quantities; ``t`` is always the first column."""

    names: list[str]
    data: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.names or self.names[0] != "t":
            raise ValueError("first column must be 't'")
        for name in self.names:
            self.data.setdefault(name, [])

    @classmethod
    def empty(cls, K_max: int, p_list: Sequence[float] = DEFAULT_P_LIST) -> "NormSeries":
        return cls(series_columns(K_max, p_list))

    def append(self, row: dict) -> None:
        missing = set(self.names) - set(row)
        if missing:
            raise KeyError(f"row lacks columns {sorted(missing)}")
        t = self.data["t"]
        if t and not row["t"] > t[-1]:
            raise ValueError(f"t must increase strictly ({row['t']} after {t[-1]})")
        values = [float(row[name]) for name in self.names]
        for name, v in zip(self.names, values):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"column {name} got invalid value {v}")
        for name, v in zip(self.names, values):
            self.data[name].append(v)

    def __len__(self) -> int:
        return len(self.data["t"])

    def __contains__(self, name: str) -> bool:
        return name in self.data

    def column(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise KeyError(f"series has no column {name!r}")
        return np.asarray(self.data[name], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def rows(self) -> Iterable[dict]:
        for i in range(len(self)):
            yield {name: self.data[name][i] for name in self.names}

    def equals(self, other: "NormSeries") -> bool:
        return self.names == other.names and all(self.data[k] == other.data[k] for k in self.names)


def record(
    state: FlowState,
    params: ModelParams,
    K_max: int = 2,
    p_list: Sequence[float] = DEFAULT_P_LIST,
    cum_dissipation: float = 0.0,
    integrator: Optional[Integrator] = None,
) -> dict:
    """One :class:`NormSeries` row for ``state``.

    ``n_t = lap n + rhs_n`` and ``u_t = mu lap u + rhs_u``, where ``rhs_u`` is
    already projected, i.e. the flux minus its gradient part ``grad P``.
    """
    integ = integrator or Integrator(state.grid, params)
    hs = integ.hs
    uh, nh = integ.to_spectral(state)
    fu, fn, _ = integ.nonlinear(uh, nh)
    nt = -hs.k2 * nh + fn
    ut = -params.mu * hs.k2 * uh + fu

    row = {"t": state.t}
    su = hs.seminorms_sq(uh, K_max)
    sn = hs.seminorms_sq(nh, K_max + 1)
    for k in range(K_max + 1):
        row[f"norm_u_k{k}"] = math.sqrt(su[k])
    for m in range(K_max + 2):
        row[f"norm_n_m{m}"] = math.sqrt(sn[m])
    for p in p_list:
        row[f"lp_n_p{p_label(p)}"] = lp_norm(state.n, p)
    snt = hs.seminorms_sq(nt, max(K_max - 1, 0))
    sut = hs.seminorms_sq(ut, max(K_max - 1, 0))
    if K_max:
        P = recover_pressure(state, params.dealias_on) if params.nonlinear else ScalarField.zeros(state.grid)
    for k in range(K_max):
        row[f"norm_nt_k{k}"] = math.sqrt(snt[k])
        row[f"norm_ut_k{k}"] = math.sqrt(sut[k])
        row[f"norm_gradP_k{k}"] = sobolev_seminorm(P, k + 1)
    row["cum_dissipation"] = cum_dissipation
    return row


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_slack: float
    checked: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst slack {self.worst_slack:.3e} over {self.checked} checks {self.detail}".rstrip()


def energy_column(series: NormSeries, mode: str, level: int = 1) -> np.ndarray:
    """Quadratic quantity monitored by ``check_energy_dissipation``."""
    sq = lambda name: series.column(name) ** 2  # noqa: E731
    if mode == "l2_director":
        return sq("norm_n_m0")
    if mode == "level_k":
        return sq(f"norm_u_k{level}") + sq(f"norm_n_m{level + 1}")
    if mode == "full_h_m":
        return sum(sq(f"norm_u_k{k}") for k in range(level + 1)) + sum(sq(f"norm_n_m{k}") for k in range(level + 2))
    raise ValueError(f"unknown energy mode {mode!r}")


def check_energy_dissipation(series: NormSeries, mode: str, level: int = 1, tol_rel: float = 1e-8) -> CheckReport:
    """Every consecutive pair must satisfy ``E[j+1] <= E[j] + tol_rel * E[j]``."""
    E = energy_column(series, mode, level)
    name = f"energy_dissipation[{mode}{'' if mode == 'l2_director' else f'={level}'}]"
    if len(E) < 2:
        return CheckReport(name, True, 0.0, 0)
    slack = E[:-1] * (1 + tol_rel) - E[1:]
    worst = int(np.argmin(slack))
    rel = (E[1:] - E[:-1]) / np.where(E[:-1] > 0, E[:-1], 1.0)
    detail = f"(max relative increase {rel.max():.3e} at t={series.t[worst + 1]:.6g})"
    return CheckReport(name, bool(np.all(slack >= 0)), float(slack[worst]), len(slack), detail)


def lp_dissipation_constant(p: float) -> float:
    """``C_p = 4 (p - 3/2) / p``."""
    return 4 * (p - 1.5) / p


def fd_gradient_sq(f: np.ndarray, dx: float) -> np.ndarray:
    """``|grad f|^2`` with fourth-order centered differences on the periodic grid."""
    out = np.zeros_like(f)
    for ax in range(3):
        d = (8 * (np.roll(f, -1, ax) - np.roll(f, 1, ax)) - (np.roll(f, -2, ax) - np.roll(f, 2, ax))) / (12 * dx)
        out += d * d
    return out


@dataclass
class LpDissipationReport:
    p: float
    rate: float
    dissipation: float
    tol: float
    integral: tuple[float, float]

    @property
    def lhs(self) -> float:
        return self.rate + lp_dissipation_constant(self.p) * self.dissipation

    @property
    def passed(self) -> bool:
        return self.lhs <= self.tol


def lp_integral(n: VectorField3, p: float) -> float:
    mag = np.sqrt(np.sum(n.values() ** 2, axis=0))
    return float(n.grid.dx**3 * np.sum(mag**p))


def lp_gradient_integral(n: VectorField3, p: float) -> float:
    """``int |grad |n|^{p/2}|^2`` by finite differences (``|n|^{p/2}`` is not band-limited)."""
    mag = np.sqrt(np.sum(n.values() ** 2, axis=0))
    return float(n.grid.dx**3 * np.sum(fd_gradient_sq(mag ** (p / 2), n.grid.dx)))


def check_lp_dissipation(pair: tuple[FlowState, FlowState], p: float, tol_scale: float = 1e-6) -> LpDissipationReport:
    """Forward-difference rate of ``int |n|^p`` plus ``C_p`` times the gradient term must be ``<= tol``.

    The gradient term is averaged over both time levels; ``tol = tol_scale * int |n|^p(t) / dt``.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    a, b = pair
    dt = b.t - a.t
    if not dt > 0:
        raise ValueError("states must be ordered in time")
    I0, I1 = lp_integral(a.n, p), lp_integral(b.n, p)
    D = 0.5 * (lp_gradient_integral(a.n, p) + lp_gradient_integral(b.n, p))
    return LpDissipationReport(p, (I1 - I0) / dt, D, tol_scale * I0 / dt, (I0, I1))


def check_l1_bound(series: NormSeries, tol_rel: float = 1e-6) -> CheckReport:
    """``||n(t)||_{L^1} <= ||n0||_{L^1} + int_0^t ||grad n||^2 + tol`` on every row."""
    l1 = series.column("lp_n_p1")
    cum = series.column("cum_dissipation")
    if len(l1) == 0:
        return CheckReport("l1_bound", True, 0.0, 0)
    tol = tol_rel * l1[0]
    slack = l1[0] + cum + tol - l1
    return CheckReport("l1_bound", bool(np.all(slack >= 0)), float(slack.min()), len(slack))


@dataclass
class ShellReport:
    R: float
    t: float
    j: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.slack >= -1e-12 * self.lhs


def check_shell_split(f: Field, j: int, R: float, t: float) -> ShellReport:
    """``||grad^{j+1} f||^2 >= R/(1+t) ||grad^j f||^2 - R^2/(1+t)^2 ||grad^{j-1} f||^2``.

    Holds mode by mode: with ``a = |k|^2`` and ``rho = R/(1+t)``,
    ``a^2 - rho a + rho^2 >= 0``.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if not R > 0 or t < 0:
        raise ValueError("need R > 0 and t >= 0")
    lhs = sobolev_seminorm(f, j + 1) ** 2
    mid = sobolev_seminorm(f, j) ** 2
    low = sobolev_seminorm(f, j - 1) ** 2
    rho = R / (1 + t)
    return ShellReport(R, t, j, lhs, rho * mid - rho**2 * low)


@dataclass
class DecayFit:
    quantity: str
    t0: float
    t1: float
    exponent: float
    intercept: float
    r_squared: float
    points: int

    @property
    def slope(self) -> float:
        """Exponent of the squared quantity."""
        return 2 * self.exponent


def fit_power_law(t: np.ndarray, values: np.ndarray, window: tuple[float, float], quantity: str = "") -> DecayFit:
    t0, t1 = window
    if not t1 > t0:
        raise ValueError("window must have t1 > t0")
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < 10:
        raise ValueError(f"need >= 10 rows in window [{t0}, {t1}], have {int(sel.sum())}")
    v = values[sel]
    if np.any(v <= 0):
        raise ValueError(f"{quantity or 'values'} must be positive inside the fit window")
    res = stats.linregress(np.log1p(t[sel]), np.log(v**2))
    r2 = min(max(res.rvalue**2, 0.0), 1.0)
    return DecayFit(quantity, t0, t1, res.slope / 2, res.intercept, r2, int(sel.sum()))


def fit_decay(series: NormSeries, quantity: str, window: tuple[float, float]) -> DecayFit:
    """Least-squares slope of ``log(value^2)`` against ``log(1+t)``, reported per norm (slope/2)."""
    return fit_power_law(series.t, series.column(quantity), window, quantity)


@dataclass
class InterpolationReport:
    s: float
    l: float
    ratio: float

    @property
    def passed(self) -> bool:
        return self.ratio <= 1 + 1e-12


def check_interpolation(f: Field, s: float, l: float) -> InterpolationReport:
    """Ratio ``||Lambda^s f|| / (||f||^{1-s/l} ||Lambda^l f||^{s/l})``, at most 1 by Hoelder over modes."""
    if s < 0 or l < 0:
        raise ValueError("orders must be >= 0")
    if s > l:
        raise ValueError(f"need s <= l, got s={s}, l={l}")
    if s == 0:
        return InterpolationReport(s, l, 1.0)
    top = sobolev_seminorm(f, s)
    base, high = sobolev_seminorm(f, 0), sobolev_seminorm(f, l)
    if top == 0:
        return InterpolationReport(s, l, 0.0 if base > 0 else 1.0)
    theta = s / l
    return InterpolationReport(s, l, top / (base ** (1 - theta) * high**theta))


def random_mean_free_field(grid: Grid, rng: np.random.Generator, vector: bool = False) -> Field:
    """Random smooth-ish field with a random spectral slope and zero mean."""
    slope = rng.uniform(0.0, 4.0)
    shape = ((3,) if vector else ()) + grid.shape
    noise = rng.standard_normal(shape)
    c = np.fft.fftn(noise, axes=(-3, -2, -1), norm="forward")
    c *= (1 + grid.k_squared) ** (-slope / 2)
    c[..., 0, 0, 0] = 0.0
    values = np.fft.ifftn(c, axes=(-3, -2, -1), norm="forward").real
    if vector:
        return VectorField3.from_array(grid, values)
    return ScalarField(grid, values)


def interpolation_sweep(trials: int, seed: int = 0, N: int = 16) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    failures = 0
    for _ in range(trials):
        grid = Grid(N, float(rng.uniform(1.0, 20.0)))
        f = random_mean_free_field(grid, rng)
        l = float(rng.uniform(0.1, 4.0))
        s = float(rng.uniform(0.0, l))
        rep = check_interpolation(f, s, l)
        worst = max(worst, rep.ratio)
        failures += not rep.passed
    return CheckReport("interpolation", failures == 0, float(1 + 1e-12 - worst), trials, f"(max ratio {worst:.15f})")


def shell_split_sweep(trials: int, seed: int = 0, N: int = 16) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = np.inf
    failures = 0
    for _ in range(trials):
        grid = Grid(N, float(rng.uniform(1.0, 50.0)))
        f = random_mean_free_field(grid, rng, vector=bool(rng.integers(2)))
        if rng.integers(2):
            # a nonzero mean is allowed; the modal inequality still holds at k = 0
            f = _shift(f, float(rng.normal()))
        rep = check_shell_split(f, int(rng.integers(1, 4)), float(rng.uniform(1e-6, 10.0)), float(rng.uniform(0, 100)))
        worst = min(worst, rep.slack / rep.lhs if rep.lhs > 0 else rep.slack)
        failures += not rep.passed
    return CheckReport("shell_split", failures == 0, float(worst), trials, "(slack relative to lhs)")


def _shift(f: Field, c: float) -> Field:
    if isinstance(f, VectorField3):
        return VectorField3.from_array(f.grid, f.values() + c)
    return ScalarField(f.grid, f.values() + c)


def theoretical_exponents(K_max: int, p_list: Sequence[float] = DEFAULT_P_LIST) -> dict[str, float]:
    """Norm-level decay exponents the monitored columns are expected to follow."""
    out = {}
    for k in range(K_max + 1):
        out[f"norm_u_k{k}"] = -(3 + 2 * k) / 4
    for m in range(K_max + 2):
        out[f"norm_n_m{m}"] = -(3 + 2 * m) / 4
    for p in p_list:
        if p >= 2 and not math.isinf(p):
            out[f"lp_n_p{p_label(p)}"] = -1.5 * (1 - 1 / p)
    for k in range(K_max):
        out[f"norm_nt_k{k}"] = -(7 + 2 * k) / 4
        out[f"norm_ut_k{k}"] = -(7 + 2 * k) / 4
        out[f"norm_gradP_k{k}"] = -(7 + 2 * k) / 4
    return out

