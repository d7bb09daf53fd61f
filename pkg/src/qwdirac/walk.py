"""One step of the coined walk on the line and on the BCC lattice.

The step operator is

    U = W_a W_b W_c exp(-i theta q),    W_i = S_i P+_i + S_i^dagger P-_i

with ``(a, b, c) = axis_order``; the coin acts first.  In momentum space
each factor ``W_i`` becomes ``exp(i k_i dx delta_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    LatticeState,
    WalkParams,
    momentum_grid,
    parity_reflect,
    random_state,
    to_momentum,
    to_position,
)
from .operator_algebra import (
    TOL,
    CertReport,
    EPS,
    CoinSet,
    MasslessSetError,
    check_anticommuting,
    coin_unitary,
    opnorm,
)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class StepOperator:
    """A walk step: lattice parameters, coin set and factor order.

    ``coin`` overrides ``exp(-i theta q)`` with an arbitrary unitary (e.g. the
    Hadamard coin).  With ``validate=False`` the set is not certified, which
    is only useful for demonstrating what goes wrong with a broken set.
    """

    params: WalkParams
    coins: CoinSet
    axis_order: tuple = (0, 1, 2)
    coin: np.ndarray | None = None
    validate: bool = True
    _coin_matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p, s = self.params, self.coins
        if s.naxes != p.dims:
            raise ValueError(f"{p.dims}D walk needs {p.dims} deltas, set has {s.naxes}")
        order = (0,) if p.dims == 1 else tuple(int(a) for a in self.axis_order)
        if sorted(order) != list(range(p.dims)):
            raise ValueError(f"axis_order {self.axis_order} is not a permutation")
        object.__setattr__(self, "axis_order", order)
        if self.coin is not None:
            c = np.asarray(self.coin, dtype=complex)
            if c.shape != (s.dim, s.dim) or opnorm(c.conj().T @ c - np.eye(s.dim)) > 1e-10:
                raise ValueError("coin must be a unitary of the set dimension")
            object.__setattr__(self, "_coin_matrix", c)
        else:
            object.__setattr__(self, "_coin_matrix", coin_unitary(s, p.theta))
        if self.validate:
            rep = check_anticommuting(s, tol=1e-10)
            if not rep.passed:
                raise ValueError(f"coin set is not anticommuting (residual {rep.residual_max:.3e})")

    @property
    def dim(self) -> int:
        return self.coins.dim

    @property
    def coin_matrix(self) -> np.ndarray:
        return self._coin_matrix


def _check_state(op: StepOperator, state: LatticeState, rep: str):
    if state.rep != rep:
        raise ValueError(f"expected a {rep}-representation state, got {state.rep}")
    if state.dims != op.params.dims or state.d != op.dim:
        raise ValueError(
            f"state shape (dims={state.dims}, d={state.d}) does not match the walk "
            f"(dims={op.params.dims}, d={op.dim})")


def step_position(op: StepOperator, state: LatticeState) -> LatticeState:
    """Apply one step sitewise and with two masked shifts per axis."""
    _check_state(op, state, "position")
    amps = state.amps @ op.coin_matrix.T
    pairs = op.coins.pairs
    for axis in reversed(op.axis_order):
        plus = amps @ pairs[axis].p_plus.T
        minus = amps @ pairs[axis].p_minus.T
        amps = np.roll(plus, 1, axis=axis) + np.roll(minus, -1, axis=axis)
    return state.with_amps(amps)


@dataclass(frozen=True)
class MomentumBlock:
    k: np.ndarray
    u: np.ndarray


def momentum_blocks(op: StepOperator, k) -> np.ndarray:
    """Stack of ``d x d`` step unitaries for k vectors of shape ``(..., dims)``.

    Each axis factor uses ``exp(i phi delta) = cos(phi) I + i sin(phi) delta``.
    """
    k = np.asarray(k, dtype=float)
    if op.params.dims == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    d = op.dim
    eye = np.eye(d, dtype=complex)
    u = np.broadcast_to(eye, k.shape[:-1] + (d, d)).copy()
    for axis in op.axis_order:
        phi = k[..., axis] * op.params.dx
        factor = (np.cos(phi)[..., None, None] * eye
                  + 1j * np.sin(phi)[..., None, None] * op.coins.deltas[axis])
        u = u @ factor
    return u @ op.coin_matrix


def momentum_block(op: StepOperator, k) -> MomentumBlock:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return MomentumBlock(k, momentum_blocks(op, k))


def step_momentum(op: StepOperator, state: LatticeState, blocks=None) -> LatticeState:
    """Multiply every k-fiber by its block; ``blocks`` may be precomputed."""
    _check_state(op, state, "momentum")
    if blocks is None:
        blocks = momentum_blocks(op, momentum_grid(state.dims, state.n, op.params.dx))
    return state.with_amps(np.einsum("...ij,...j->...i", blocks, state.amps))


def evolve_position(op: StepOperator, state: LatticeState, steps: int) -> LatticeState:
    for _ in range(steps):
        state = step_position(op, state)
    return state


def evolve_momentum(op: StepOperator, state: LatticeState, steps: int) -> LatticeState:
    """``steps`` walk steps applied fiberwise as ``U(k)**steps``.

    Accepts either representation and returns the same one it was given.
    """
    rep = state.rep
    mom = to_momentum(state)
    _check_state(op, mom, "momentum")
    blocks = momentum_blocks(op, momentum_grid(mom.dims, mom.n, op.params.dx))
    power = np.linalg.matrix_power(blocks, int(steps))
    out = mom.with_amps(np.einsum("...ij,...j->...i", power, mom.amps))
    return to_position(out) if rep == "position" else out


def parity_apply(q: np.ndarray, state: LatticeState) -> LatticeState:
    """Full parity: spatial inversion together with ``q`` on every site."""
    reflected = parity_reflect(state)
    return reflected.with_amps(reflected.amps @ np.asarray(q).T)


def check_parity_invariance(op: StepOperator, trials: int = 20, tol: float = TOL,
                            rng=None) -> CertReport:
    """Compare ``P U P psi`` with ``U psi`` on random states."""
    if op.coins.q is None:
        raise MasslessSetError("parity needs the internal operator q")
    rng = np.random.default_rng(rng)
    q = op.coins.q
    p = op.params
    residuals = []
    for t in range(trials):
        psi = random_state(p.dims, p.n, op.dim, p.dx, rng)
        direct = step_position(op, psi)
        via = parity_apply(q, step_position(op, parity_apply(q, psi)))
        residuals.append((f"trial {t}", float(np.linalg.norm(via.amps - direct.amps))))
    rmax = max(r for _, r in residuals)
    return CertReport("parity_invariance", rmax, tol, bool(rmax < tol and tol >= EPS),
                      [{"label": label, "residual": r} for label, r in residuals])
