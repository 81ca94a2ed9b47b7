"""Simplified Ericksen-Leslie dynamics on the periodic box.

Unknowns are the velocity ``u`` and the director deviation ``n = d - w0``::

    u_t + u.grad u - mu lap u + grad P = -div(grad n (.) grad n),   div u = 0
    n_t + u.grad n = lap n + |grad n|^2 (n + w0)

The public right-hand-side functions below follow these formulas literally with
full complex FFTs.  :class:`Integrator` is the solver's inner loop; it works on
real-FFT half spectra and evaluates the same projected right-hand sides in a
cheaper form (rotational advection, stress divergence modulo gradients), which
agrees with the literal form once the Leray projection is applied.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    VectorField3,
    dealias,
    half_spectrum,
    leray_project,
    partial_derivative,
)

CFL_LIMIT = 0.5


class ConstraintAbort(RuntimeError):
    """The director left the unit sphere by more than the configured tolerance."""

    def __init__(self, deviation: float, t: float, tol: float):
        super().__init__(f"max | |n+w0| - 1 | = {deviation:.3e} exceeds {tol:.1e} at t = {t:.6g}")
        self.deviation = deviation
        self.t = t
        self.partial = None


class CFLWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ModelParams:
    mu: float = 1.0
    w0: tuple[float, float, float] = (0.0, 0.0, 1.0)
    dt: float = 1e-3
    t_end: float = 1.0
    dealias_on: bool = True
    renormalize_director: str = "off"
    constraint_abort_tol: float = 1e-2
    # test hook: False turns both equations into pure heat flows
    nonlinear: bool = True

    def __post_init__(self):
        w0 = tuple(float(x) for x in self.w0)
        object.__setattr__(self, "w0", w0)
        if len(w0) != 3 or abs(np.linalg.norm(w0) - 1.0) > 1e-14:
            raise ValueError(f"w0 must be a unit 3-vector, got {w0}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.mu > 0:
            raise ValueError("mu must be > 0")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if self.renormalize_director not in ("off", "every_step"):
            raise ValueError("renormalize_director must be 'off' or 'every_step'")
        if not self.constraint_abort_tol > 0:
            raise ValueError("constraint_abort_tol must be > 0")

    @property
    def w0_array(self) -> np.ndarray:
        return np.asarray(self.w0).reshape(3, 1, 1, 1)


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    u: VectorField3
    n: VectorField3

    def __post_init__(self):
        if self.u.grid != self.n.grid:
            raise ValueError("u and n must share a grid")
        object.__setattr__(self, "u", self.u.to_physical())
        object.__setattr__(self, "n", self.n.to_physical())

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: Grid, t: float, u: np.ndarray, n: np.ndarray) -> "FlowState":
        return cls(t, VectorField3.from_array(grid, u), VectorField3.from_array(grid, n))

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "FlowState":
        return cls(t, VectorField3.zeros(grid), VectorField3.zeros(grid))


def constraint_deviation(n: np.ndarray, w0) -> float:
    """``max | |n + w0| - 1 |`` over the grid for a (3, N, N, N) array."""
    d = n + np.asarray(w0).reshape(3, 1, 1, 1)
    return float(np.abs(np.sqrt(np.sum(d * d, axis=0)) - 1.0).max())


def _grad(f: ScalarField) -> list[np.ndarray]:
    return [partial_derivative(f, i).values() for i in (1, 2, 3)]


def _maybe_dealias(f: ScalarField, on: bool) -> ScalarField:
    return dealias(f).to_physical() if on else f


def elastic_stress(n: VectorField3, dealias_on: bool = True) -> tuple[tuple[ScalarField, ...], ...]:
    """Entries ``S_ij = sum_a d_i n_a d_j n_a`` (``grad d == grad n`` since ``w0`` is constant)."""
    grid = n.grid
    grads = [_grad(na) for na in n]
    entries = {}
    for i in range(3):
        for j in range(i, 3):
            s = sum(grads[a][i] * grads[a][j] for a in range(3))
            entries[i, j] = _maybe_dealias(ScalarField(grid, s), dealias_on)
    return tuple(tuple(entries[min(i, j), max(i, j)] for j in range(3)) for i in range(3))


def _stress_divergence(n: VectorField3, dealias_on: bool) -> np.ndarray:
    S = elastic_stress(n, dealias_on)
    return np.stack([sum(partial_derivative(S[i][j], j + 1).values() for j in range(3)) for i in range(3)])


def _advection(u: VectorField3, q: VectorField3, dealias_on: bool) -> np.ndarray:
    """``(u . grad) q`` componentwise in physical space."""
    grid = u.grid
    uv = u.values()
    out = []
    for qa in q:
        g = _grad(qa)
        s = uv[0] * g[0] + uv[1] * g[1] + uv[2] * g[2]
        out.append(_maybe_dealias(ScalarField(grid, s), dealias_on).data)
    return np.stack(out)


def momentum_flux(state: FlowState, dealias_on: bool = True) -> np.ndarray:
    """``u.grad u + div(grad n (.) grad n)`` in physical space."""
    return _advection(state.u, state.u, dealias_on) + _stress_divergence(state.n, dealias_on)


def rhs_u(state: FlowState, dealias_on: bool = True) -> VectorField3:
    """Projected nonlinear velocity tendency; diffusion is left to the integrating factor."""
    flux = momentum_flux(state, dealias_on)
    return leray_project(VectorField3.from_array(state.grid, -flux)).to_physical()


def rhs_n(state: FlowState, w0=(0.0, 0.0, 1.0), dealias_on: bool = True) -> VectorField3:
    """``-u.grad n + |grad n|^2 (n + w0)``; the ``|grad n|^2`` factor is dealiased before the cubic product."""
    grid = state.grid
    nv = state.n.values()
    grads = [_grad(na) for na in state.n]
    gsq = sum(g[i] ** 2 for g in grads for i in range(3))
    gsq = _maybe_dealias(ScalarField(grid, gsq), dealias_on).data
    d = nv + np.asarray(w0, dtype=float).reshape(3, 1, 1, 1)
    cubic = np.stack([_maybe_dealias(ScalarField(grid, gsq * d[a]), dealias_on).data for a in range(3)])
    return VectorField3.from_array(grid, cubic - _advection(state.u, state.n, dealias_on))


def recover_pressure(state: FlowState, dealias_on: bool = True) -> ScalarField:
    """Solve ``lap P = -div(flux)`` spectrally with zero-mean ``P``."""
    grid = state.grid
    flux = momentum_flux(state, dealias_on)
    F = VectorField3.from_array(grid, flux).to_spectral()
    kx, ky, kz = grid.k_axes_odd()
    kdotF = kx * F[0].data + ky * F[1].data + kz * F[2].data
    k2 = kx**2 + ky**2 + kz**2
    k2[k2 == 0] = 1.0
    P = 1j * kdotF / k2
    P[0, 0, 0] = 0.0
    return ScalarField(grid, P, "spectral").to_physical()


@dataclass
class StageInfo:
    """Physical fields at the start of a step, produced as a by-product of the first stage."""

    u: Optional[np.ndarray]
    n: np.ndarray
    max_speed: float = 0.0


class Integrator:
    """Integrating-factor Heun stepper on real-FFT half spectra."""

    def __init__(self, grid: Grid, params: ModelParams):
        self.grid = grid
        self.params = params
        self.hs = half_spectrum(grid)
        self.Eu = np.exp(-params.mu * self.hs.k2 * params.dt)
        self.En = np.exp(-self.hs.k2 * params.dt)
        self.w0 = params.w0_array

    def to_spectral(self, state: FlowState) -> tuple[np.ndarray, np.ndarray]:
        return self.hs.forward(state.u.array), self.hs.forward(state.n.array)

    def to_state(self, t: float, uh: np.ndarray, nh: np.ndarray) -> FlowState:
        return FlowState.from_arrays(self.grid, t, self.hs.inverse(uh), self.hs.inverse(nh))

    def nonlinear(self, uh: np.ndarray, nh: np.ndarray, need_u: bool = False):
        """Return ``(rhs_u_hat, rhs_n_hat, StageInfo)``."""
        hs = self.hs
        if not self.params.nonlinear:
            u = hs.inverse(uh) if need_u else None
            return 0.0, 0.0, StageInfo(u, hs.inverse(nh))

        ikx, iky, ikz = hs.ik
        u = hs.inverse(uh)
        n = hs.inverse(nh)
        omega = hs.inverse(np.stack([iky * uh[2] - ikz * uh[1], ikz * uh[0] - ikx * uh[2], ikx * uh[1] - iky * uh[0]]))
        # g[a, j] = d_j n_a
        g = hs.inverse(np.stack([ikx * nh, iky * nh, ikz * nh], axis=1))
        lap_n = hs.inverse(-hs.k2 * nh)

        # -u.grad u == u x omega and -div S == -sum_a lap n_a grad n_a, both modulo gradients
        fu = np.cross(u, omega, axis=0)
        fu -= np.einsum("a...,aj...->j...", lap_n, g)
        fu_hat = hs.forward(fu)
        if self.params.dealias_on:
            fu_hat *= hs.mask
        fu_hat = hs.project(fu_hat)
        fu_hat[:, 0, 0, 0] = 0.0  # flux divergence has no mean

        gsq = np.einsum("aj...,aj...->...", g, g)
        if self.params.dealias_on:
            gsq = hs.inverse(hs.forward(gsq) * hs.mask)
        fn = gsq * (n + self.w0)
        fn -= np.einsum("j...,aj...->a...", u, g)
        fn_hat = hs.forward(fn)
        if self.params.dealias_on:
            fn_hat *= hs.mask
        speed = float(np.sqrt(np.max(np.sum(u * u, axis=0))))
        return fu_hat, fn_hat, StageInfo(u, n, speed)

    def step(self, uh: np.ndarray, nh: np.ndarray, need_u: bool = False):
        """One step; returns ``(uh_new, nh_new, StageInfo at the old time)``."""
        dt = self.params.dt
        fu0, fn0, info = self.nonlinear(uh, nh, need_u)
        if not self.params.nonlinear:
            return self.Eu * uh, self.En * nh, info
        u1 = self.Eu * (uh + dt * fu0)
        n1 = self.En * (nh + dt * fn0)
        fu1, fn1, _ = self.nonlinear(u1, n1)
        u_new = self.Eu * (uh + 0.5 * dt * fu0) + 0.5 * dt * fu1
        n_new = self.En * (nh + 0.5 * dt * fn0) + 0.5 * dt * fn1
        if self.params.renormalize_director == "every_step":
            n_new = self.renormalize(n_new)
        return u_new, n_new, info

    def renormalize(self, nh: np.ndarray) -> np.ndarray:
        d = self.hs.inverse(nh) + self.w0
        d /= np.sqrt(np.sum(d * d, axis=0))
        return self.hs.forward(d - self.w0)

    def check(self, info: StageInfo, t: float) -> float:
        """Constraint monitor and CFL advisory for the fields in ``info``; returns the deviation."""
        dev = constraint_deviation(info.n, self.params.w0)
        if dev > self.params.constraint_abort_tol:
            raise ConstraintAbort(dev, t, self.params.constraint_abort_tol)
        cfl = self.params.dt * info.max_speed * self.grid.N / self.grid.L
        if cfl > CFL_LIMIT:
            warnings.warn(f"CFL number {cfl:.3f} exceeds {CFL_LIMIT} at t = {t:.6g}", CFLWarning, stacklevel=3)
        return dev


def step(state: FlowState, params: ModelParams) -> FlowState:
    """Advance ``state`` by one time step ``params.dt``."""
    integ = Integrator(state.grid, params)
    uh, nh = integ.to_spectral(state)
    uh, nh, info = integ.step(uh, nh)
    integ.check(info, state.t)
    out = integ.to_state(state.t + params.dt, uh, nh)
    integ.check(StageInfo(None, out.n.array), out.t)
    return out

