"""Periodic-box fields and spectral calculus.

Fields live on an ``N**3`` grid over ``[0, L)**3`` and are stored with array
index order ``[x, y, z]``.  Spectral coefficients use the forward-normalized
DFT, ``c(m) = N**-3 * sum_x f(x) exp(-i k.x)``, so that ``sin(x)`` on a
``2*pi`` box has coefficients ``-i/2`` and ``+i/2`` at ``m = +-1`` and Parseval
reads ``(L/N)**3 * sum |f|**2 == L**3 * sum |c|**2``.

Two layers are provided: immutable :class:`ScalarField` / :class:`VectorField3`
values with full complex spectra (used by diagnostics and tests), and
:class:`HalfSpectrum`, a cached real-FFT workspace used in the solver's inner
loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Literal, Union

import numpy as np
import scipy.fft as sfft

Basis = Literal["physical", "spectral"]

HERMITIAN_RTOL = 1e-12


class FieldIntegrityError(ValueError):
    """Raised for non-finite samples or spectra that cannot come from a real field."""


@dataclass(frozen=True)
class Grid:
    """Cubic periodic box with ``N`` points per axis and edge length ``L``."""

    N: int
    L: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even >= 8, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def volume(self) -> float:
        return self.L**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers in FFT order, ``0..N/2-1, -N/2..-1``."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return (2 * np.pi / self.L) * self.mode_index

    @cached_property
    def coords(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(self.coords, self.coords, self.coords, indexing="ij", sparse=True)

    def k_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wavenumber arrays for the full spectrum."""
        k = self.wavenumbers
        return k[:, None, None], k[None, :, None], k[None, None, :]

    def k_axes_odd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Like :meth:`k_axes` with the Nyquist entry zeroed, for first-order operators."""
        k = self.wavenumbers.copy()
        k[self.N // 2] = 0.0
        return k[:, None, None], k[None, :, None], k[None, None, :]

    @cached_property
    def k_squared(self) -> np.ndarray:
        kx, ky, kz = self.k_axes()
        return kx**2 + ky**2 + kz**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.mode_index) <= self.N // 3
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real scalar field in physical or spectral basis."""

    grid: Grid
    data: np.ndarray
    basis: Basis = "physical"

    def __post_init__(self):
        if self.data.shape != self.grid.shape:
            raise ValueError(f"data shape {self.data.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.data)):
            raise FieldIntegrityError("field contains non-finite values")
        if self.basis == "spectral":
            _check_hermitian(self.data)
        elif self.basis != "physical":
            raise ValueError(f"unknown basis {self.basis!r}")

    def to_spectral(self) -> "ScalarField":
        return transform(self, "spectral")

    def to_physical(self) -> "ScalarField":
        return transform(self, "physical")

    def values(self) -> np.ndarray:
        """Physical samples (transforming if necessary)."""
        return self.to_physical().data

    def coeffs(self) -> np.ndarray:
        return self.to_spectral().data

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))


@dataclass(frozen=True, eq=False)
class VectorField3:
    """Three scalar components sharing one grid and basis."""

    components: tuple[ScalarField, ScalarField, ScalarField]

    def __post_init__(self):
        if len(self.components) != 3:
            raise ValueError("VectorField3 needs exactly three components")
        g, b = self.components[0].grid, self.components[0].basis
        for c in self.components[1:]:
            if c.grid != g or c.basis != b:
                raise ValueError("components must share grid and basis")

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def basis(self) -> Basis:
        return self.components[0].basis

    def __getitem__(self, i: int) -> ScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def array(self) -> np.ndarray:
        return np.stack([c.data for c in self.components])

    @classmethod
    def from_array(cls, grid: Grid, arr: np.ndarray, basis: Basis = "physical") -> "VectorField3":
        return cls(tuple(ScalarField(grid, np.ascontiguousarray(arr[i]), basis) for i in range(3)))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField3":
        return cls.from_array(grid, np.zeros((3,) + grid.shape))

    def to_spectral(self) -> "VectorField3":
        return transform(self, "spectral")

    def to_physical(self) -> "VectorField3":
        return transform(self, "physical")

    def values(self) -> np.ndarray:
        return self.to_physical().array


Field = Union[ScalarField, VectorField3]


def _check_hermitian(c: np.ndarray) -> None:
    mirrored = np.conj(np.roll(np.flip(c), 1, axis=(0, 1, 2)))
    scale = np.abs(c).max()
    if scale > 0 and np.abs(c - mirrored).max() > HERMITIAN_RTOL * scale:
        raise FieldIntegrityError("spectral coefficients are not Hermitian-symmetric")


def _map(field: Field, fn) -> Field:
    if isinstance(field, VectorField3):
        return VectorField3(tuple(fn(c) for c in field.components))
    return fn(field)


def transform(field: Field, target: Basis) -> Field:
    """Convert a field to ``target`` basis (no-op if already there)."""
    if target not in ("physical", "spectral"):
        raise ValueError(f"unknown basis {target!r}")

    def one(f: ScalarField) -> ScalarField:
        if f.basis == target:
            return f
        if target == "spectral":
            return ScalarField(f.grid, sfft.fftn(f.data, norm="forward", workers=-1), "spectral")
        # imaginary residue is roundoff for Hermitian input
        return ScalarField(f.grid, sfft.ifftn(f.data, norm="forward", workers=-1).real, "physical")

    return _map(field, one)


def _spectral_map(field: Field, multiplier) -> Field:
    def one(f: ScalarField) -> ScalarField:
        c = f.coeffs()
        return ScalarField(f.grid, c * multiplier(f.grid), "spectral")

    return _map(field, one)


def lambda_power(field: Field, s: float) -> Field:
    """Fractional derivative ``Lambda**s``: multiply each mode by ``|k|**s``."""
    if s < 0:
        raise ValueError("lambda_power needs s >= 0")
    if s == 0:
        return transform(field, "spectral")

    def mult(grid: Grid) -> np.ndarray:
        return np.sqrt(grid.k_squared) ** s

    return _spectral_map(field, mult)


def _derivative_factor(grid: Grid, axis: int, order: int) -> np.ndarray:
    k = grid.wavenumbers.astype(complex)
    factor = (1j * k) ** order
    if order % 2:
        factor[grid.N // 2] = 0.0
    shape = [1, 1, 1]
    shape[axis] = grid.N
    return factor.reshape(shape)


def partial_derivative(field: Field, axis: int, order: int = 1) -> Field:
    """``order``-th derivative along ``axis`` (1, 2 or 3)."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    if order < 1:
        raise ValueError("order must be >= 1")
    return _spectral_map(field, lambda g: _derivative_factor(g, axis - 1, order))


def leray_project(v: VectorField3) -> VectorField3:
    """Project onto divergence-free fields, mode-wise ``I - k k^T / |k|^2``."""
    grid = v.grid
    c = np.stack([comp.coeffs() for comp in v.components])
    kvec = grid.k_axes_odd()
    k2 = kvec[0] ** 2 + kvec[1] ** 2 + kvec[2] ** 2
    k2[k2 == 0] = 1.0
    kdotc = sum(kvec[i] * c[i] for i in range(3)) / k2
    out = np.stack([c[i] - kvec[i] * kdotc for i in range(3)])
    return VectorField3.from_array(grid, out, "spectral")


def dealias(field: Field) -> Field:
    """2/3 rule: zero every mode with some ``|m| > floor(N/3)``."""
    return _spectral_map(field, lambda g: g.dealias_mask)


def divergence_residual(v: VectorField3) -> float:
    """``max |k . v_hat|`` relative to ``max |k| |v_hat|`` (0 for constant fields)."""
    grid = v.grid
    c = np.stack([comp.coeffs() for comp in v.components])
    kvec = grid.k_axes_odd()
    div = np.abs(sum(kvec[i] * c[i] for i in range(3)))
    scale = (np.sqrt(grid.k_squared) * np.sqrt(np.sum(np.abs(c) ** 2, axis=0))).max()
    return float(div.max() / scale) if scale > 0 else 0.0


def sobolev_seminorm(field: Field, k: float) -> float:
    """``||Lambda**k f||_{L^2}`` via Parseval."""
    if k < 0:
        raise ValueError("seminorm order must be >= 0")
    comps = field.components if isinstance(field, VectorField3) else (field,)
    grid = comps[0].grid
    weight = grid.k_squared**k if k > 0 else 1.0
    total = sum(np.sum(weight * np.abs(c.coeffs()) ** 2) for c in comps)
    return float(np.sqrt(grid.volume * total))


def pointwise_magnitude(field: Field) -> np.ndarray:
    if isinstance(field, VectorField3):
        return np.sqrt(np.sum(field.values() ** 2, axis=0))
    return np.abs(field.values())


def lp_norm(field: Field, p: float) -> float:
    """``L^p`` norm by physical quadrature; ``p = inf`` gives the max norm."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mag = pointwise_magnitude(field)
    if np.isinf(p):
        return float(mag.max())
    grid = field.grid
    return float((grid.dx**3 * np.sum(mag**p)) ** (1.0 / p))


def norm(field: Field, kind: str, order: float) -> float:
    """Dispatch to ``sobolev_seminorm`` (kind ``"sobolev_seminorm"``) or ``lp_norm`` (kind ``"lp"``)."""
    if kind == "sobolev_seminorm":
        return sobolev_seminorm(field, order)
    if kind == "lp":
        return lp_norm(field, order)
    raise ValueError(f"unknown norm kind {kind!r}")


def spectral_quadratic_form(field: Field) -> float:
    """``L**3 * sum |c|**2``, the spectral side of Parseval."""
    return sobolev_seminorm(field, 0) ** 2


class HalfSpectrum:
    """Real-FFT workspace for one grid: half-spectrum wavenumbers, masks and transforms.

    Arrays carry components on a leading axis; the last axis holds ``N//2 + 1``
    non-negative ``kz`` modes.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        N = grid.N
        k = grid.wavenumbers
        kz = (2 * np.pi / grid.L) * np.arange(N // 2 + 1)
        self.kx = k[:, None, None]
        self.ky = k[None, :, None]
        self.kz = kz[None, None, :]
        self.k2 = self.kx**2 + self.ky**2 + self.kz**2

        # odd derivatives: Nyquist rows carry no sign information
        ikx, iky, ikz = 1j * self.kx.copy(), 1j * self.ky.copy(), 1j * self.kz.copy()
        ikx[N // 2] = 0
        iky[:, N // 2] = 0
        ikz[:, :, N // 2] = 0
        self.ik = (ikx, iky, ikz)
        # first-order operators (projection, divergence) use the Nyquist-free wavevector
        self.kxo, self.kyo, self.kzo = ikx.imag, iky.imag, ikz.imag
        k2o = self.kxo**2 + self.kyo**2 + self.kzo**2
        self.k2o_safe = np.where(k2o == 0, 1.0, k2o)

        m = np.abs(grid.mode_index)
        keep = m <= N // 3
        keep_z = np.arange(N // 2 + 1) <= N // 3
        self.mask = keep[:, None, None] & keep[None, :, None] & keep_z[None, None, :]

        w = np.full(N // 2 + 1, 2.0)
        w[0] = 1.0
        w[N // 2] = 1.0
        self.weight = np.broadcast_to(w[None, None, :], self.k2.shape)

    def forward(self, arr: np.ndarray) -> np.ndarray:
        return sfft.rfftn(arr, axes=(-3, -2, -1), norm="forward", workers=-1)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        N = self.grid.N
        return sfft.irfftn(coeffs, s=(N, N, N), axes=(-3, -2, -1), norm="forward", workers=-1)

    def project(self, vh: np.ndarray) -> np.ndarray:
        kdot = (self.kxo * vh[0] + self.kyo * vh[1] + self.kzo * vh[2]) / self.k2o_safe
        return np.stack([vh[0] - self.kxo * kdot, vh[1] - self.kyo * kdot, vh[2] - self.kzo * kdot])

    def seminorm_sq(self, coeffs: np.ndarray, k: int) -> float:
        """Squared ``||nabla^k f||_{L^2}`` summed over leading components."""
        a2 = coeffs.real**2 + coeffs.imag**2
        if a2.ndim == 4:
            a2 = a2.sum(axis=0)
        if k:
            a2 = a2 * self.k2**k
        return float(self.grid.volume * np.sum(self.weight * a2))

    def seminorms_sq(self, coeffs: np.ndarray, k_max: int) -> list[float]:
        """Squared ``||nabla^k f||_{L^2}`` for ``k = 0..k_max`` from one pass over the modes."""
        a2 = coeffs.real**2 + coeffs.imag**2
        if a2.ndim == 4:
            a2 = a2.sum(axis=0)
        a2 = a2 * self.weight
        out = [float(self.grid.volume * a2.sum())]
        for _ in range(k_max):
            a2 = a2 * self.k2
            out.append(float(self.grid.volume * a2.sum()))
        return out

    def divergence_residual(self, vh: np.ndarray) -> float:
        div = np.abs(self.kxo * vh[0] + self.kyo * vh[1] + self.kzo * vh[2])
        scale = (np.sqrt(self.k2) * np.sqrt(np.sum(np.abs(vh) ** 2, axis=0))).max()
        return float(div.max() / scale) if scale > 0 else 0.0


@lru_cache(maxsize=8)
def half_spectrum(grid: Grid) -> HalfSpectrum:
    return HalfSpectrum(grid)
