"""Wavefunctions on periodic 1D and 3D cubic lattices.

Amplitudes are stored as an array of shape ``(n,) * dims + (d,)`` so the
internal (coin) index varies fastest.

Momentum convention: the momentum label ``k`` belongs to the shift
eigenstate ``|k> = sum_j exp(-i k x_j) |x_j>``, for which
``S|k> = exp(i k dx)|k>``.  The momentum amplitude is therefore
``phi(k) = n**(-dims/2) * sum_j exp(+i k x_j) psi_j``, i.e. the unitary
inverse FFT.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WalkParams:
    """Lattice and particle parameters in units with hbar = c = 1.

    ``dt = dx`` and the coin angle is ``theta = mass * dx``.
    """

    dims: int
    n: int
    dx: float = 1.0
    mass: float = 0.0

    def __post_init__(self):
        if self.dims not in (1, 3):
            raise ValueError("dims must be 1 or 3")
        if not _is_pow2(int(self.n)):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if not np.isfinite(self.mass):
            raise ValueError("mass must be finite")

    @property
    def c(self) -> float:
        return 1.0

    @property
    def dt(self) -> float:
        return self.dx / self.c

    @property
    def theta(self) -> float:
        return self.mass * self.c * self.dx

    @property
    def length(self) -> float:
        return self.n * self.dx

    @classmethod
    def from_theta(cls, dims, n, dx, theta):
        return cls(dims, n, dx, theta / dx)


def momentum_axis(n: int, dx: float) -> np.ndarray:
    """k values in FFT index order, ``k dx`` in ``(-pi, pi]``."""
    m = np.arange(n)
    m = np.where(m > n // 2, m - n, m)
    return 2 * np.pi * m / (n * dx)


def momentum_grid(dims: int, n: int, dx: float) -> np.ndarray:
    """Array of shape ``(n,) * dims + (dims,)`` holding the k vector per fiber."""
    k = momentum_axis(n, dx)
    mesh = np.meshgrid(*([k] * dims), indexing="ij")
    return np.stack(mesh, axis=-1)


def position_grid(dims: int, n: int, dx: float) -> np.ndarray:
    x = np.arange(n) * dx
    mesh = np.meshgrid(*([x] * dims), indexing="ij")
    return np.stack(mesh, axis=-1)


@dataclass(frozen=True)
class LatticeState:
    amps: np.ndarray
    dx: float = 1.0
    rep: str = "position"

    def __post_init__(self):
        if self.rep not in ("position", "momentum"):
            raise ValueError(f"unknown representation {self.rep!r}")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim not in (2, 4):
            raise ValueError("amps must have shape (n,)*dims + (d,) with dims 1 or 3")
        if len(set(amps.shape[:-1])) != 1:
            raise ValueError("lattice must be cubic")
        object.__setattr__(self, "amps", amps)

    @property
    def dims(self) -> int:
        return self.amps.ndim - 1

    @property
    def n(self) -> int:
        return self.amps.shape[0]

    @property
    def d(self) -> int:
        return self.amps.shape[-1]

    @property
    def spatial_axes(self) -> tuple:
        return tuple(range(self.dims))

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def normalize(self) -> "LatticeState":
        return replace(self, amps=self.amps / self.norm())

    def with_amps(self, amps) -> "LatticeState":
        return replace(self, amps=amps)

    def inner(self, other: "LatticeState") -> complex:
        return complex(np.vdot(self.amps, other.amps))


def random_state(dims: int, n: int, d: int, dx: float = 1.0, rng=None) -> LatticeState:
    rng = np.random.default_rng(rng)
    shape = (n,) * dims + (d,)
    amps = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return LatticeState(amps, dx).normalize()


def delta_state(dims: int, n: int, spinor, site=None, dx: float = 1.0) -> LatticeState:
    spinor = np.asarray(spinor, dtype=complex)
    amps = np.zeros((n,) * dims + (spinor.size,), dtype=complex)
    site = (0,) * dims if site is None else tuple(np.atleast_1d(site))
    amps[tuple(s % n for s in site)] = spinor
    return LatticeState(amps, dx)


def plane_wave(dims: int, n: int, k, spinor, dx: float = 1.0) -> LatticeState:
    """Normalized momentum eigenstate with label ``k`` (amplitude ``exp(-i k.x)``)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    x = position_grid(dims, n, dx)
    phase = np.exp(-1j * (x @ k))
    amps = phase[..., None] * np.asarray(spinor, dtype=complex)
    return LatticeState(amps, dx).normalize()


def _require_position(state: LatticeState, what: str):
    if state.rep != "position":
        raise ValueError(f"{what} needs a position-representation state")


def shift(state: LatticeState, axis: int, direction: int = 1) -> LatticeState:
    """Move every amplitude one site along ``axis`` (``+1`` is ``S``, ``-1`` is ``S^dagger``)."""
    _require_position(state, "shift")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if not 0 <= axis < state.dims:
        raise ValueError(f"axis {axis} out of range for a {state.dims}D state")
    return state.with_amps(np.roll(state.amps, direction, axis=axis))


def to_momentum(state: LatticeState) -> LatticeState:
    if state.rep == "momentum":
        return state
    amps = np.fft.ifftn(state.amps, axes=state.spatial_axes, norm="ortho")
    return replace(state, amps=amps, rep="momentum")


def to_position(state: LatticeState) -> LatticeState:
    if state.rep == "position":
        return state
    amps = np.fft.fftn(state.amps, axes=state.spatial_axes, norm="ortho")
    return replace(state, amps=amps, rep="position")


def parity_reflect(state: LatticeState) -> LatticeState:
    """Spatial inversion ``j -> -j (mod n)``; the internal components are untouched."""
    _require_position(state, "parity_reflect")
    axes = state.spatial_axes
    amps = np.roll(np.flip(state.amps, axis=axes), 1, axis=axes)
    return state.with_amps(amps)


def gaussian_packet(params: WalkParams, center, k0, sigma: float, spinor) -> LatticeState:
    """Normalized Gaussian packet with momentum label ``k0``.

    ``psi(x) ~ exp(-|x - center|^2 / (4 sigma^2)) exp(-i k0.(x - center)) spinor``,
    with ``x - center`` taken as the minimal periodic image.  The carrier sign
    follows the momentum convention of this module, so the momentum
    amplitudes peak at ``k0``.
    """
    dims, dx = params.dims, params.dx
    center = np.broadcast_to(np.asarray(center, dtype=float), (dims,))
    k0 = np.broadcast_to(np.asarray(k0, dtype=float), (dims,))
    if sigma < 2 * dx:
        raise ValueError(f"sigma={sigma} is below the resolvable width 2*dx={2 * dx}")
    if np.any(np.abs(k0 * dx) >= np.pi):
        raise ValueError("k0 lies outside the Brillouin zone")
    spinor = np.asarray(spinor, dtype=complex)
    length = params.length
    disp = position_grid(dims, params.n, dx) - center
    disp = (disp + length / 2) % length - length / 2
    envelope = np.exp(-np.sum(disp**2, axis=-1) / (4 * sigma**2))
    amps = (envelope * np.exp(-1j * (disp @ k0)))[..., None] * spinor
    return LatticeState(amps, dx).normalize()


# --- CSV snapshots ----------------------------------------------------------

def _index_header(state: LatticeState) -> list:
    stem = "site" if state.rep == "position" else "k_index"
    if state.dims == 1:
        return [stem]
    return [f"{stem}_{a}" for a in "xyz"]


def state_to_csv(state: LatticeState) -> str:
    """Rows ``index...,component,re,im`` with 17 significant digits."""
    buf = io.StringIO()
    buf.write(",".join(_index_header(state) + ["component", "re", "im"]) + "\n")
    flat = state.amps.reshape(-1, state.d)
    for lin, row in enumerate(flat):
        idx = np.unravel_index(lin, state.amps.shape[:-1])
        prefix = ",".join(str(int(i)) for i in idx)
        for comp, z in enumerate(row):
            buf.write(f"{prefix},{comp},{z.real:.17g},{z.imag:.17g}\n")
    return buf.getvalue()


def write_state_csv(state: LatticeState, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(state_to_csv(state))


def read_state_csv(path, dx: float = 1.0) -> LatticeState:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    nidx = len(header) - 3
    if nidx not in (1, 3) or header[nidx:] != ["component", "re", "im"]:
        raise ValueError(f"unrecognized state header {header}")
    rep = "position" if header[0].startswith("site") else "momentum"
    data = np.array(rows, dtype=float)
    idx = data[:, :nidx].astype(int)
    comp = data[:, nidx].astype(int)
    n = int(idx.max()) + 1
    d = int(comp.max()) + 1
    amps = np.zeros((n,) * nidx + (d,), dtype=complex)
    amps[tuple(idx.T) + (comp,)] = data[:, nidx + 1] + 1j * data[:, nidx + 2]
    return LatticeState(amps, dx, rep)
