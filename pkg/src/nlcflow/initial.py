"""Small, localized initial data: divergence-free velocity and unit-sphere directors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Grid, VectorField3, leray_project, sobolev_seminorm


@dataclass(frozen=True)
class Bump:
    center: tuple[float, float, float]
    width: float


@dataclass(frozen=True)
class InitSpec:
    seed: int = 0
    bumps: tuple[Bump, ...] = ()
    velocity_amplitude: float = 1.0
    director_amplitude: float = 1.0
    delta0: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(b if isinstance(b, Bump) else Bump(*b) for b in self.bumps))
        if self.velocity_amplitude < 0 or self.director_amplitude < 0:
            raise ValueError("amplitudes must be >= 0")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be > 0")
        for b in self.bumps:
            if not b.width > 0:
                raise ValueError(f"bump width must be > 0, got {b.width}")

    def validate_for(self, grid: Grid) -> None:
        for b in self.bumps:
            if b.width > grid.L / 8:
                raise ValueError(f"bump width {b.width} exceeds L/8 = {grid.L / 8}")


def gaussian_bump(grid: Grid, center, width: float) -> np.ndarray:
    """Periodized ``exp(-|x - c|^2 / (2 w^2))``, separable and summed over neighbouring images."""
    factors = []
    for c in center:
        x = grid.coords - c
        f = sum(np.exp(-((x + s * grid.L) ** 2) / (2 * width**2)) for s in (-1, 0, 1))
        factors.append(f)
    return factors[0][:, None, None] * factors[1][None, :, None] * factors[2][None, None, :]


def h_norm_sq(v: VectorField3, s: int) -> float:
    """Full ``H^s`` norm squared as the sum of integer seminorms ``0..s``."""
    return sum(sobolev_seminorm(v, k) ** 2 for k in range(s + 1))


def _random_unit(rng: np.random.Generator, normal_to=None) -> np.ndarray:
    while True:
        a = rng.standard_normal(3)
        if normal_to is not None:
            a -= np.dot(a, normal_to) * normal_to
        norm = np.linalg.norm(a)
        if norm > 1e-8:
            return a / norm


def gen_velocity(spec: InitSpec, grid: Grid) -> VectorField3:
    """Leray-projected superposition of Gaussian vector bumps with ``||u0||_{H^1}^2 <= delta0/2``."""
    spec.validate_for(grid)
    if spec.velocity_amplitude == 0 or not spec.bumps:
        return VectorField3.zeros(grid)
    rng = np.random.default_rng([spec.seed, 1])
    arr = np.zeros((3,) + grid.shape)
    for b in spec.bumps:
        arr += spec.velocity_amplitude * _random_unit(rng).reshape(3, 1, 1, 1) * gaussian_bump(grid, b.center, b.width)
    u = leray_project(VectorField3.from_array(grid, arr))
    coeffs = u.array
    coeffs[:, 0, 0, 0] = 0.0
    u = VectorField3.from_array(grid, coeffs, "spectral").to_physical()
    budget = spec.delta0 / 2
    h1 = h_norm_sq(u, 1)
    if h1 > budget:
        u = VectorField3.from_array(grid, u.array * np.sqrt(budget / h1) * (1 - 1e-12))
    return u


def director_from_tangent(psi: np.ndarray, w0) -> np.ndarray:
    """Geodesic map ``d = cos|psi| w0 + sin|psi| psi/|psi|`` (``d = w0`` where ``psi = 0``)."""
    w0 = np.asarray(w0, dtype=float).reshape(3, 1, 1, 1)
    r = np.sqrt(np.sum(psi * psi, axis=0))
    safe = np.where(r > 0, r, 1.0)
    return np.cos(r) * w0 + np.sin(r) / safe * psi


def gen_director(spec: InitSpec, grid: Grid, w0=(0.0, 0.0, 1.0)) -> VectorField3:
    """Return ``n0 = d0 - w0`` for a Gaussian tangent field of amplitude ``director_amplitude``.

    The tangent amplitude is shrunk (never ``n0`` itself, which would leave the
    sphere) until ``||n0||_{H^2}^2 <= delta0/2``.
    """
    spec.validate_for(grid)
    w0 = np.asarray(w0, dtype=float)
    if abs(np.linalg.norm(w0) - 1) > 1e-14:
        raise ValueError("w0 must be a unit vector")
    if spec.director_amplitude == 0 or not spec.bumps:
        return VectorField3.zeros(grid)
    rng = np.random.default_rng([spec.seed, 2])
    shape = np.zeros((3,) + grid.shape)
    for b in spec.bumps:
        shape += _random_unit(rng, w0).reshape(3, 1, 1, 1) * gaussian_bump(grid, b.center, b.width)
    budget = spec.delta0 / 2
    eps = spec.director_amplitude
    while True:
        n0 = director_from_tangent(eps * shape, w0) - w0.reshape(3, 1, 1, 1)
        field = VectorField3.from_array(grid, n0)
        h2 = h_norm_sq(field, 2)
        if h2 <= budget:
            return field
        eps *= 0.999 * np.sqrt(budget / h2)


@dataclass
class SmallnessReport:
    value: float
    delta0: float
    u_h1_sq: float
    n_h2_sq: float

    @property
    def margin(self) -> float:
        return self.delta0 - self.value

    @property
    def passed(self) -> bool:
        return self.value <= self.delta0


def smallness_check(u0: VectorField3, n0: VectorField3, delta0: float) -> SmallnessReport:
    """``||u0||_{H^1}^2 + ||n0||_{H^2}^2`` against the budget ``delta0``."""
    if u0.grid != n0.grid:
        raise ValueError("u0 and n0 must share a grid")
    a, b = h_norm_sq(u0, 1), h_norm_sq(n0, 2)
    return SmallnessReport(a + b, delta0, a, b)
