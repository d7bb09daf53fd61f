"""Walk dispersion relation, its deviation from Dirac, and lattice anisotropy."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants

from .continuum import ContinuumParams, dirac_generator
from .walk import StepOperator, momentum_blocks


def walk_dispersion(op: StepOperator, k) -> np.ndarray:
    """Branch frequencies ``-arg(lambda_j) / dt`` of ``U(k)``, sorted ascending.

    ``k`` may be a single vector or an array ``(..., dims)``; the principal
    argument is used, so frequencies lie in ``(-pi/dt, pi/dt]``.
    """
    u = momentum_blocks(op, k)
    lam = np.linalg.eigvals(u)
    phase = np.angle(lam)
    # np.angle gives [-pi, pi]; map -pi to +pi so -phase lands in (-pi, pi]
    phase = np.where(phase == np.pi, -np.pi, phase)
    return np.sort(-phase / op.params.dt, axis=-1)


def dirac_dispersion(m: float, k) -> tuple:
    """``(-E, +E)`` with ``E = sqrt(m^2 + |k|^2)``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    e = float(np.sqrt(m * m + np.dot(k, k)))
    return -e, e


def dirac_branches(m: float, k, d: int) -> np.ndarray:
    lo, hi = dirac_dispersion(m, k)
    return np.repeat([lo, hi], d // 2)


def continuum_dispersion(params: ContinuumParams, k) -> np.ndarray:
    return np.linalg.eigvalsh(dirac_generator(params, k))


@dataclass(frozen=True)
class DispersionRow:
    k: tuple
    omega_walk: tuple
    omega_dirac: tuple

    @property
    def residual(self) -> tuple:
        return tuple(w - d for w, d in zip(self.omega_walk, self.omega_dirac))


def dispersion_table(op: StepOperator, ks) -> list:
    ks = np.atleast_2d(np.asarray(ks, dtype=float))
    omegas = walk_dispersion(op, ks)
    rows = []
    for k, w in zip(ks, omegas):
        rows.append(DispersionRow(tuple(k), tuple(w), tuple(dirac_branches(op.params.mass, k, op.dim))))
    return rows


def dispersion_csv(rows) -> str:
    out = ["kx,ky,kz,branch,omega_walk,omega_dirac,residual"]
    for row in rows:
        k = list(row.k) + [0.0] * (3 - len(row.k))
        kk = ",".join(f"{x:.17g}" for x in k)
        for b, (w, d, r) in enumerate(zip(row.omega_walk, row.omega_dirac, row.residual)):
            out.append(f"{kk},{b},{w:.17g},{d:.17g},{r:.17g}")
    return "\n".join(out) + "\n"


def ray_sweep(op: StepOperator, direction, kmax: float, points: int) -> list:
    """Dispersion table along ``k = s * direction`` for ``s`` in ``[0, kmax]``."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    ks = np.linspace(0.0, kmax, points)[:, None] * direction
    return dispersion_table(op, ks)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    fit_residual: float


def correction_scaling(op: StepOperator, direction, magnitudes) -> ScalingFit:
    """Power-law fit of ``max_j |omega_j^2 - (m^2 + |k|^2)|`` against ``|k|``."""
    magnitudes = np.asarray(magnitudes, dtype=float)
    if magnitudes.size < 3:
        raise ValueError("need at least three magnitudes for a power-law fit")
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    if np.any(np.abs(np.outer(magnitudes, direction)) * op.params.dx > np.pi):
        raise ValueError("magnitudes leave the Brillouin zone")
    ks = magnitudes[:, None] * direction
    w = walk_dispersion(op, ks)
    e2 = op.params.mass**2 + magnitudes**2
    dev = np.max(np.abs(w**2 - e2[:, None]), axis=1)
    # deviations at roundoff level carry no power law
    if np.any(dev <= 64 * np.finfo(float).eps * e2) or np.any(magnitudes <= 0):
        raise ValueError("degenerate fit: zero deviation or zero magnitude")
    x, y = np.log(magnitudes), np.log(dev)
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return ScalingFit(float(slope), float(np.exp(icpt)), resid)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def anisotropy(model, magnitude: float, dir_a, dir_b) -> float:
    """Largest branchwise frequency difference between two directions at fixed ``|k|``.

    ``model`` is a :class:`StepOperator` (the walk) or a
    :class:`ContinuumParams` (the continuum reference).
    """
    ka, kb = magnitude * _unit(dir_a), magnitude * _unit(dir_b)
    if isinstance(model, StepOperator):
        wa, wb = walk_dispersion(model, ka), walk_dispersion(model, kb)
    elif isinstance(model, ContinuumParams):
        wa, wb = continuum_dispersion(model, ka), continuum_dispersion(model, kb)
    else:
        raise TypeError(f"cannot take the dispersion of {type(model).__name__}")
    return float(np.max(np.abs(wa - wb)))


def anisotropy_csv(rows) -> str:
    """``rows`` of ``(k_mag, dir_a, dir_b, delta_omega)``."""
    def fmt_dir(v):
        return "(" + " ".join(f"{x:.17g}" for x in v) + ")"
    out = ["k_mag,dir_a,dir_b,delta_omega"]
    for k, a, b, dw in rows:
        out.append(f"{k:.17g},{fmt_dir(a)},{fmt_dir(b)},{dw:.17g}")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class InterferometerScenario:
    """Matter-wave interferometer in SI units."""

    p: float
    v: float
    L: float
    dx: float
    hbar: float = constants.hbar
    c: float = constants.c

    def __post_init__(self):
        for name in ("p", "v", "L", "dx", "hbar", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.v >= self.c:
            raise ValueError("v must be below c")

    @classmethod
    def thermal_neutron(cls, v: float = 2200.0, L: float = 1.0, dx: float = 1.0):
        return cls(p=constants.m_n * v, v=v, L=L, dx=dx)


def phase_shift_estimate(s: InterferometerScenario) -> float:
    """Phase ``(c p^2 dx / hbar) * (L / v) / hbar`` accumulated across the arm."""
    splitting = s.c * s.p**2 * s.dx / s.hbar
    return splitting * (s.L / s.v) / s.hbar


def phase_shift_json(s: InterferometerScenario) -> str:
    per_meter = phase_shift_estimate(InterferometerScenario(s.p, s.v, s.L, 1.0, s.hbar, s.c))
    return json.dumps({
        "delta_phi": phase_shift_estimate(s),
        "delta_phi_per_meter_dx": per_meter,
        "scenario": asdict(s),
    })
