"""Internal-space operators of the coined walk and their certification.

Every walk in this package is built from a :class:`CoinSet`: one Hermitian
involution ``delta`` per spatial axis (the difference ``P+ - P-`` of the
forward/backward projectors) plus an optional coin generator ``q``.  The
certifiers here check the algebraic relations that make the walk unbiased,
parity symmetric and rotationally symmetric in the long-wavelength limit.

All residuals are operator (spectral) norms.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

TOL = 1e-12
# tolerances below double-precision resolution cannot certify anything
EPS = np.finfo(float).eps

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

AXIS_NAMES = ("X", "Y", "Z")


class MasslessSetError(ValueError):
    """Raised when an operation needs the coin generator ``q`` but the set has none."""


def opnorm(a: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(a, 2))


def anticomm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def _as_matrix(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class ProjectorPair:
    p_plus: np.ndarray
    p_minus: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.p_plus - self.p_minus


def projectors_from_delta(delta, tol: float = TOL) -> ProjectorPair:
    """Split a Hermitian involution into ``P± = (I ± delta) / 2``."""
    delta = _as_matrix(delta, "delta")
    eye = np.eye(delta.shape[0])
    if opnorm(delta - delta.conj().T) > tol:
        raise ValueError("delta is not Hermitian")
    if opnorm(delta @ delta - eye) > tol:
        raise ValueError("delta does not square to the identity")
    return ProjectorPair((eye + delta) / 2, (eye - delta) / 2)


@dataclass(frozen=True)
class CoinSet:
    """Per-axis involutions ``deltas`` and optional coin generator ``q``.

    Construction only checks that each operator is a Hermitian involution of
    the right size.  Relations between operators (anticommutation, parity)
    are left to the ``check_*`` functions, so deliberately broken sets can
    still be built and shown to fail.
    """

    deltas: tuple
    q: np.ndarray | None = None
    tol: float = field(default=1e-10, repr=False, compare=False)

    def __post_init__(self):
        deltas = tuple(_as_matrix(d, "delta") for d in self.deltas)
        if len(deltas) not in (1, 3):
            raise ValueError("a coin set has 1 (line) or 3 (cubic) deltas")
        dim = deltas[0].shape[0]
        eye = np.eye(dim)
        for i, d in enumerate(deltas):
            if d.shape != (dim, dim):
                raise ValueError("all deltas must share one dimension")
            if opnorm(d - d.conj().T) > self.tol or opnorm(d @ d - eye) > self.tol:
                raise ValueError(f"delta[{i}] is not a Hermitian involution")
        object.__setattr__(self, "deltas", deltas)
        if self.q is not None:
            q = _as_matrix(self.q, "q")
            if q.shape != (dim, dim):
                raise ValueError("q dimension differs from deltas")
            if opnorm(q - q.conj().T) > self.tol or opnorm(q @ q - eye) > self.tol:
                raise ValueError("q is not a Hermitian involution")
            object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.deltas[0].shape[0]

    @property
    def naxes(self) -> int:
        return len(self.deltas)

    @property
    def pairs(self) -> tuple:
        return tuple(projectors_from_delta(d, self.tol) for d in self.deltas)

    def operators(self) -> dict:
        ops = {f"dP_{AXIS_NAMES[i]}" if self.naxes == 3 else "dP": d
               for i, d in enumerate(self.deltas)}
        if self.q is not None:
            ops["Q"] = self.q
        return ops

    # serialization: {"dim": d, "deltas": [{"re": [...], "im": [...]}], "q": ...}
    def to_json(self) -> str:
        def enc(m):
            return {"re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}
        return json.dumps({
            "dim": self.dim,
            "deltas": [enc(d) for d in self.deltas],
            "q": None if self.q is None else enc(self.q),
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CoinSet":
        data = json.loads(text)
        unknown = set(data) - {"dim", "deltas", "q"}
        if unknown:
            raise ValueError(f"unknown keys in coin set file: {sorted(unknown)}")
        dim = int(data["dim"])

        def dec(entry):
            re = np.asarray(entry["re"], dtype=float)
            im = np.asarray(entry["im"], dtype=float)
            if re.size != dim * dim or im.size != dim * dim:
                raise ValueError("matrix entry count does not match dim")
            return (re + 1j * im).reshape(dim, dim)

        q = data.get("q")
        return cls(tuple(dec(d) for d in data["deltas"]), None if q is None else dec(q))

    @classmethod
    def load(cls, path) -> "CoinSet":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class GammaSet:
    g0: np.ndarray
    g_spatial: tuple


@dataclass
class CertReport:
    check: str
    residual_max: float
    tolerance: float
    passed: bool
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"check": self.check, "residual_max": self.residual_max,
                "tolerance": self.tolerance, "pass": bool(self.passed),
                "details": self.details}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __bool__(self):
        return bool(self.passed)


def _report(check, residuals, tol):
    rmax = max((r for _, r in residuals), default=0.0)
    details = [{"label": label, "residual": float(r)} for label, r in residuals]
    return CertReport(check, float(rmax), tol, bool(rmax < tol and tol >= EPS), details)


# --- canonical sets -------------------------------------------------------

def make_weyl_set() -> CoinSet:
    """Two-dimensional massless set: the Pauli matrices, no coin generator."""
    return CoinSet(PAULI)


def make_dirac_set() -> CoinSet:
    """Four-dimensional set in the Dirac layout.

    ``q = diag(1, 1, -1, -1)`` and ``delta_i = [[0, s_i], [s_i, 0]]``.
    """
    zero = np.zeros((2, 2))
    eye = np.eye(2)
    q = np.block([[eye, zero], [zero, -eye]]).astype(complex)
    deltas = tuple(np.block([[zero, s], [s, zero]]) for s in PAULI)
    return CoinSet(deltas, q)


def make_line_set() -> CoinSet:
    """1D two-component set, ``q = sigma_z`` and ``delta = sigma_x``."""
    return CoinSet((SIGMA_X,), SIGMA_Z)


def random_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fix."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    qm, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return qm * ph


def random_rotation(rng=None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    qm, r = np.linalg.qr(rng.standard_normal((3, 3)))
    qm = qm * np.sign(np.diag(r))
    if np.linalg.det(qm) < 0:
        qm[:, 0] = -qm[:, 0]
    return qm


def conjugate_set(coins: CoinSet, u, tol: float = TOL) -> CoinSet:
    """Return the set with every operator replaced by ``u M u^dagger``."""
    u = _as_matrix(u, "u")
    if u.shape[0] != coins.dim:
        raise ValueError("unitary dimension does not match the coin set")
    if opnorm(u.conj().T @ u - np.eye(coins.dim)) > tol:
        raise ValueError("u is not unitary")
    ud = u.conj().T
    q = None if coins.q is None else u @ coins.q @ ud
    return CoinSet(tuple(u @ d @ ud for d in coins.deltas), q)


# --- certifiers -----------------------------------------------------------

def check_equal_norm(coins: CoinSet, tol: float = TOL) -> CertReport:
    """Check ``P^k_i P^l_j P^k_i = P^k_i / 2`` for all distinct axes and signs.

    Also checks that forward and backward projectors have equal trace.
    """
    if coins.naxes != 3:
        raise ValueError("equal-norm condition needs three axes")
    pairs = coins.pairs
    residuals = []
    for i, j in itertools.permutations(range(3), 2):
        for k, l in itertools.product((0, 1), repeat=2):
            pk = (pairs[i].p_plus, pairs[i].p_minus)[k]
            pl = (pairs[j].p_plus, pairs[j].p_minus)[l]
            label = f"P{'+-'[k]}_{AXIS_NAMES[i]} P{'+-'[l]}_{AXIS_NAMES[j]} P{'+-'[k]}_{AXIS_NAMES[i]}"
            residuals.append((label, opnorm(pk @ pl @ pk - pk / 2)))
    for i, pair in enumerate(pairs):
        tr = abs(np.trace(pair.p_plus) - np.trace(pair.p_minus))
        residuals.append((f"Tr P+_{AXIS_NAMES[i]} - Tr P-_{AXIS_NAMES[i]}", float(tr)))
    return _report("equal_norm", residuals, tol)


def check_anticommuting(coins: CoinSet, tol: float = TOL) -> CertReport:
    names = list(coins.operators())
    residuals = []
    for i, j in itertools.combinations(range(coins.naxes), 2):
        residuals.append((f"{{{names[i]},{names[j]}}}",
                          opnorm(anticomm(coins.deltas[i], coins.deltas[j]))))
    if coins.q is not None:
        for i, d in enumerate(coins.deltas):
            residuals.append((f"{{Q,{names[i]}}}", opnorm(anticomm(coins.q, d))))
    return _report("anticommuting", residuals, tol)


def check_parity_covariance(coins: CoinSet, tol: float = TOL) -> CertReport:
    """Check ``q P+_i q = P-_i``: the coin flip is fair along every axis."""
    if coins.q is None:
        raise MasslessSetError("parity covariance needs a coin generator q")
    q = coins.q
    residuals = []
    for i, pair in enumerate(coins.pairs):
        axis = AXIS_NAMES[i] if coins.naxes == 3 else "x"
        residuals.append((f"Q P+_{axis} Q - P-_{axis}", opnorm(q @ pair.p_plus @ q - pair.p_minus)))
    return _report("parity_covariance", residuals, tol)


def certify_gamma(gs: GammaSet, tol: float = TOL) -> CertReport:
    d = gs.g0.shape[0]
    eye = np.eye(d)
    residuals = [("g0^2 - I", opnorm(gs.g0 @ gs.g0 - eye))]
    for i, g in enumerate(gs.g_spatial, 1):
        residuals.append((f"g{i}^2 + I", opnorm(g @ g + eye)))
    mats = (gs.g0,) + tuple(gs.g_spatial)
    for a, b in itertools.combinations(range(len(mats)), 2):
        residuals.append((f"{{g{a},g{b}}}", opnorm(anticomm(mats[a], mats[b]))))
    return _report("gamma", residuals, tol)


def to_gamma(coins: CoinSet, tol: float = TOL) -> GammaSet:
    """``g0 = q`` and ``g_i = q delta_i``; raises if the relations fail."""
    if coins.q is None:
        raise MasslessSetError("gamma matrices need a coin generator q")
    gs = GammaSet(coins.q, tuple(coins.q @ d for d in coins.deltas))
    rep = certify_gamma(gs, tol)
    if not rep.passed:
        raise ValueError(f"gamma relations fail: residual {rep.residual_max:.3e}")
    return gs


def rotate_deltas(coins: CoinSet, r, tol: float = TOL) -> CoinSet:
    """Rotate the delta triple: ``delta'_a = sum_b r[b, a] delta_b``."""
    if coins.naxes != 3:
        raise ValueError("rotation needs three axes")
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or opnorm(r.T @ r - np.eye(3)) > tol:
        raise ValueError("r is not an orthogonal 3x3 matrix")
    stack = np.stack(coins.deltas)
    rotated = np.einsum("ba,bij->aij", r, stack)
    # the constructor re-checks the squares; anticommutators checked here
    out = CoinSet(tuple(rotated), coins.q, tol=max(coins.tol, 1e-10))
    rep = check_anticommuting(out, tol=1e-10)
    if not rep.passed:
        raise ValueError(f"rotated set no longer anticommutes: {rep.residual_max:.3e}")
    return out


# --- generalized walk unitarity ---------------------------------------------

@dataclass(frozen=True)
class GeneralizedWalkSpec:
    """Walk ``sum_j S^{d_j} (x) A_j`` given as (displacement, A_j) pairs."""

    ops: tuple

    def __post_init__(self):
        ops = tuple((tuple(int(x) for x in disp), _as_matrix(a, "A")) for disp, a in self.ops)
        if not ops:
            raise ValueError("need at least one operator")
        dims = {a.shape for _, a in ops}
        if len(dims) != 1:
            raise ValueError(f"operator dimension mismatch: {sorted(dims)}")
        disps = [d for d, _ in ops]
        if len(set(disps)) != len(disps):
            raise ValueError("displacements must be distinct")
        object.__setattr__(self, "ops", ops)


def bcc_walk_spec(coins: CoinSet, theta: float = 0.0, axis_order=(0, 1, 2)) -> GeneralizedWalkSpec:
    """Expand the three-factor product walk into its eight BCC hops.

    ``A_(sx,sy,sz) = P^sx_X P^sy_Y P^sz_Z C`` with ``C = exp(-i theta q)``;
    factors follow ``axis_order``.
    """
    if coins.naxes != 3:
        raise ValueError("BCC expansion needs three axes")
    pairs = coins.pairs
    coin = coin_unitary(coins, theta)
    ops = []
    for signs in itertools.product((1, -1), repeat=3):
        a = np.eye(coins.dim, dtype=complex)
        disp = [0, 0, 0]
        for axis, s in zip(axis_order, signs):
            a = a @ (pairs[axis].p_plus if s > 0 else pairs[axis].p_minus)
            disp[axis] = s
        ops.append((tuple(disp), a @ coin))
    return GeneralizedWalkSpec(tuple(ops))


def check_generalized_unitarity(spec: GeneralizedWalkSpec, tol: float = TOL) -> CertReport:
    """Check ``sum_j A_j A_j^dag = I`` and every off-diagonal shift block vanishes."""
    d = spec.ops[0][1].shape[0]
    diag = sum(a @ a.conj().T for _, a in spec.ops)
    residuals = [("sum A A^dag - I", opnorm(diag - np.eye(d)))]
    blocks: dict = {}
    for (dj, aj), (dk, ak) in itertools.product(spec.ops, repeat=2):
        v = tuple(x - y for x, y in zip(dj, dk))
        if any(v):
            blocks[v] = blocks.get(v, 0) + aj @ ak.conj().T
    for v in sorted(blocks):
        residuals.append((f"v={v}", opnorm(blocks[v])))
    return _report("generalized_unitarity", residuals, tol)


def coin_unitary(coins: CoinSet, theta: float) -> np.ndarray:
    """``exp(-i theta q) = cos(theta) I - i sin(theta) q``."""
    eye = np.eye(coins.dim, dtype=complex)
    if theta == 0:
        return eye
    if coins.q is None:
        raise MasslessSetError("nonzero coin angle needs a coin generator q")
    return np.cos(theta) * eye - 1j * np.sin(theta) * coins.q


# --- minimality at d = 2 ----------------------------------------------------

def _sphere_involution(polar, azim):
    n = (np.sin(polar) * np.cos(azim), np.sin(polar) * np.sin(azim), np.cos(polar))
    return sum(c * s for c, s in zip(n, PAULI))


def search_fourth_anticommuting(deltas=PAULI, step_deg: float = 1.0):
    """Best attempt at a 2x2 Hermitian involution anticommuting with ``deltas``.

    Every 2x2 Hermitian involution is ``±I`` or ``n.sigma`` with ``n`` on the
    unit sphere.  The sphere is scanned on a ``step_deg`` grid, the best grid
    points are refined with Nelder-Mead, and ``±I`` are scored directly.
    Returns ``(residual, candidate)`` where residual is the smallest achieved
    value of ``max_i ||{candidate, delta_i}||``.
    """
    deltas = [np.asarray(d, dtype=complex) for d in deltas]

    def cost(x):
        m = _sphere_involution(*x)
        return max(opnorm(anticomm(m, d)) for d in deltas)

    step = np.deg2rad(step_deg)
    polar = np.arange(0, np.pi + step / 2, step)
    azim = np.arange(0, 2 * np.pi, step)
    pp, aa = np.meshgrid(polar, azim, indexing="ij")
    n = np.stack([np.sin(pp) * np.cos(aa), np.sin(pp) * np.sin(aa), np.cos(pp)], axis=-1)
    mats = np.einsum("...k,kij->...ij", n, np.stack(PAULI))
    grid_cost = np.zeros(pp.shape)
    for d in deltas:
        ac = mats @ d + d @ mats
        grid_cost = np.maximum(grid_cost, np.linalg.norm(ac, 2, axis=(-2, -1)))
    flat = np.argsort(grid_cost, axis=None)[:20]
    best_val, best_mat = np.inf, None
    for idx in flat:
        i, j = np.unravel_index(idx, grid_cost.shape)
        res = minimize(cost, [pp[i, j], aa[i, j]], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12})
        if res.fun < best_val:
            best_val, best_mat = float(res.fun), _sphere_involution(*res.x)
    eye = np.eye(2, dtype=complex)
    for m in (eye, -eye):
        c = max(opnorm(anticomm(m, d)) for d in deltas)
        if c < best_val:
            best_val, best_mat = c, m
    return best_val, best_mat
