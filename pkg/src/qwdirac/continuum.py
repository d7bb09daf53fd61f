"""Exact continuum Dirac/Weyl evolution on the walk's momentum grid.

The continuum generator at momentum ``k`` is

    H(k) = -c k.delta + m q

so that ``i d/dt phi(k) = H(k) phi(k)``; the sign of the kinetic term follows
the momentum convention in :mod:`qwdirac.lattice`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    LatticeState,
    WalkParams,
    gaussian_packet,
    momentum_grid,
    shift,
    to_momentum,
    to_position,
)
from .operator_algebra import CoinSet, MasslessSetError, check_anticommuting
from .walk import StepOperator, evolve_momentum


@dataclass(frozen=True)
class ContinuumParams:
    coins: CoinSet
    mass: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("mass must be non-negative")
        if self.mass > 0 and self.coins.q is None:
            raise MasslessSetError("a massive particle needs the coin generator q")
        rep = check_anticommuting(self.coins, tol=1e-10)
        if not rep.passed:
            raise ValueError(f"coin set is not anticommuting (residual {rep.residual_max:.3e})")


def dirac_generator(params: ContinuumParams, k) -> np.ndarray:
    """``H(k)`` for k vectors of shape ``(..., naxes)``; returns ``(..., d, d)``."""
    k = np.asarray(k, dtype=float)
    s = params.coins
    if s.naxes == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    h = -params.c * np.einsum("...a,aij->...ij", k, np.stack(s.deltas)).astype(complex)
    if params.mass:
        h = h + params.mass * s.q
    return h


def dirac_evolve(params: ContinuumParams, state: LatticeState, t: float) -> LatticeState:
    """Evolve each k-fiber by ``exp(-i H(k) t)`` via eigendecomposition."""
    rep = state.rep
    mom = to_momentum(state)
    if mom.d != params.coins.dim or mom.dims != params.coins.naxes:
        raise ValueError("state does not match the coin set")
    k = momentum_grid(mom.dims, mom.n, mom.dx)
    evals, evecs = np.linalg.eigh(dirac_generator(params, k))
    coeff = np.einsum("...ji,...j->...i", evecs.conj(), mom.amps)
    coeff = coeff * np.exp(-1j * evals * t)
    out = mom.with_amps(np.einsum("...ij,...j->...i", evecs, coeff))
    return to_position(out) if rep == "position" else out


def difference_derivative(state: LatticeState, axis: int = 0) -> LatticeState:
    """Central difference ``(S - S^dagger) / (2 dx)`` along ``axis``.

    With ``S`` moving amplitudes toward larger x, this acts on a smooth
    amplitude profile as ``-d/dx`` and multiplies the momentum eigenstate
    ``|k>`` by ``i sin(k dx) / dx``.
    """
    fwd = shift(state, axis, 1).amps
    back = shift(state, axis, -1).amps
    return state.with_amps((fwd - back) / (2 * state.dx))


def aligned_distance(a: LatticeState, b: LatticeState) -> float:
    """L2 distance after rotating ``b`` by the global phase that best matches ``a``."""
    overlap = np.vdot(b.amps, a.amps)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a.amps - phase * b.amps))


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian packet in physical units (shared across resolution levels)."""

    center: tuple
    k0: tuple
    sigma: float
    spinor: tuple


@dataclass(frozen=True)
class ConvergenceRow:
    dx: float
    steps: int
    error: float
    fitted_order: float


def fit_order(dxs, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dx)``."""
    dxs, errors = np.asarray(dxs, float), np.asarray(errors, float)
    if dxs.size < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(dxs), np.log(errors), 1)
    return float(slope)


def convergence_scan(params_list, packet: PacketSpec, t_physical: float, coins: CoinSet,
                     axis_order=(0, 1, 2)) -> list:
    """Walk versus continuum error at fixed physical time for each resolution.

    Every entry of ``params_list`` must describe the same physical box and
    mass; ``t_physical`` must be a whole number of steps at every ``dt``.
    """
    plan = []
    for p in params_list:
        steps = int(round(t_physical / p.dt))
        if steps < 0 or abs(steps * p.dt - t_physical) > 1e-9 * max(1.0, t_physical):
            raise ValueError(f"t={t_physical} is not a whole number of steps at dt={p.dt}")
        plan.append((p, steps))
    cont = ContinuumParams(coins, mass=params_list[0].mass)
    errors = []
    for p, steps in plan:
        op = StepOperator(p, coins, axis_order)
        psi0 = gaussian_packet(p, packet.center, packet.k0, packet.sigma, packet.spinor)
        mom = to_momentum(psi0)
        walked = evolve_momentum(op, mom, steps)
        exact = dirac_evolve(cont, mom, t_physical)
        errors.append(aligned_distance(exact, walked))
    order = fit_order([p.dx for p, _ in plan], errors)
    return [ConvergenceRow(p.dx, steps, e, order) for (p, steps), e in zip(plan, errors)]


def halving_levels(dims: int, n0: int, dx0: float, mass: float, levels: int) -> list:
    """``levels`` WalkParams with dx halved and n doubled each time."""
    return [WalkParams(dims, n0 * 2**i, dx0 / 2**i, mass) for i in range(levels)]


def convergence_csv(rows) -> str:
    lines = ["dx,steps,error,fitted_order"]
    for r in rows:
        lines.append(f"{r.dx:.17g},{r.steps},{r.error:.17g},{r.fitted_order:.17g}")
    return "\n".join(lines) + "\n"
