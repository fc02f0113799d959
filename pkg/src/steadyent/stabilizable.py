"""Which states can be made stationary under a fixed dissipator.

A state rho is stabilizable when some Hamiltonian makes it stationary. The
necessary moment conditions Tr[rho^(n-1) D(rho)] = 0 are exposed here, along
with the two-qubit quadric form of the n = 2 condition in Bloch coordinates,
a Lagrange solver for linear objectives on that quadric, and the explicit
Hamiltonian reconstruction for non-degenerate states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import unitary_group

from . import qcore
from .dynamics import LindbladChannel, dissipator_apply
from .entanglement import bell_state
from .errors import NoRoot, NotStabilizable, SingularConstraintMatrix, ValidationError
from .models import rho_star

DEGENERACY_TOL = 1e-8

# Bloch labels are 1-based (a = 4i + j); array index is label - 1.
_TABLE_DIAGONAL = (1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 8)
_TABLE_OFF_DIAGONAL = ((1, 7), (2, 11), (3, 15), (4, 13), (8, 14), (12, 15))
_TABLE_LINEAR = (3, 12)


@dataclass(frozen=True)
class QuadricForm:
    """The scalar form r . (D r + c) over 15-component Bloch vectors.

    ``d`` is symmetrized on construction; only its symmetric part enters.
    ``kappa`` records the factor relating the form to Tr[rho D(rho)] when
    known.
    """

    d: np.ndarray
    c: np.ndarray
    gamma: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if d.shape != (15, 15) or c.shape != (15,):
            raise ValidationError("quadric needs a 15x15 matrix and a 15-vector")
        object.__setattr__(self, "d", (d + d.T) / 2)
        object.__setattr__(self, "c", c)

    def __call__(self, r: np.ndarray) -> float:
        r = np.asarray(r, dtype=float)
        return float(r @ (self.d @ r + self.c))

    def scaled(self, factor: float) -> "QuadricForm":
        gamma = None if self.gamma is None else self.gamma * factor
        return QuadricForm(self.d * factor, self.c * factor, gamma, self.kappa)

    def to_json(self) -> dict:
        return {"D": self.d.tolist(), "c": self.c.tolist(), "gamma": self.gamma}


def tabulated_quadric(gamma: float) -> QuadricForm:
    """Quadric for two-qubit decay at rate gamma, from a fixed reference table.

    Each listed off-diagonal pair holds a single entry -gamma, which becomes
    -gamma/2 on both sides after symmetrization. The entries are kept exactly
    as tabulated; :func:`build_quadric` gives the form derived from the
    dissipator itself, and the two disagree on a handful of entries.
    """
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    d = np.diag([-gamma / 2 * k for k in _TABLE_DIAGONAL]).astype(float)
    for a, b in _TABLE_OFF_DIAGONAL:
        d[a - 1, b - 1] = -gamma
    c = np.zeros(15)
    for a in _TABLE_LINEAR:
        c[a - 1] = -gamma
    return QuadricForm(d, c, gamma)


def build_quadric(channel: LindbladChannel) -> QuadricForm:
    """Quadric built from the dissipator on the 16 Pauli strings.

    With rho = (1/4) sum_a r_a B_a (r_0 = 1) and G_ab = Tr[B_a D(B_b)],
    4 Tr[rho D(rho)] = r . (D r + c) where D = sym(G[1:, 1:])/4 and
    c = (G[1:, 0] + G[0, 1:])/4, so kappa = 4.
    """
    if channel.dim not in (None, 4):
        raise ValidationError(f"build_quadric needs a two-qubit channel, got dim {channel.dim}")
    basis = [qcore.pauli_string(a // 4, a % 4) for a in range(16)]
    images = [dissipator_apply(channel, b) if len(channel) else np.zeros((4, 4)) for b in basis]
    g = np.array([[np.trace(ba @ img).real for img in images] for ba in basis])
    return QuadricForm(g[1:, 1:] / 4, (g[1:, 0] + g[0, 1:]) / 4, channel.gamma_max, 4.0)


def moment_residuals(rho: np.ndarray, channel: LindbladChannel) -> list[float]:
    """Tr[rho^(n-1) D(rho)] for n = 2..d; all vanish for a stabilizable state."""
    rho = qcore.check_density_matrix(rho)
    drho = dissipator_apply(channel, rho)
    out = []
    power = rho.copy()
    for _ in range(2, rho.shape[0] + 1):
        out.append(float(np.trace(power @ drho).real))
        power = power @ rho
    return out


def quadric_residual(r: np.ndarray, q: QuadricForm) -> float:
    return q(r)


def _degenerate_blocks(p: np.ndarray, tol: float) -> list[list[int]]:
    blocks = [[0]]
    for k in range(1, len(p)):
        if p[k] - p[k - 1] <= tol:
            blocks[-1].append(k)
        else:
            blocks.append([k])
    return blocks


def reconstruct_hamiltonian(
    rho: np.ndarray,
    channel: LindbladChannel,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> np.ndarray:
    """Hamiltonian that makes rho stationary, H_ab = i<a|D(rho)|b>/(p_a - p_b).

    Elements inside degenerate eigenvalue blocks are left at zero. The
    dissipator must vanish on those blocks (diagonal included), otherwise no
    Hamiltonian can compensate it and ``NotStabilizable`` is raised.
    """
    rho = qcore.check_density_matrix(rho)
    p, v = qcore.hermitian_eig(rho)
    dm = v.conj().T @ dissipator_apply(channel, rho) @ v
    limit = 1e-8 * max(channel.gamma_max, 1e-300)
    in_block = np.zeros(dm.shape, dtype=bool)
    for block in _degenerate_blocks(p, degeneracy_tol):
        in_block[np.ix_(block, block)] = True
    worst = float(np.max(np.abs(dm[in_block]), initial=0.0))
    if worst > limit:
        raise NotStabilizable(
            f"dissipator element {worst:.3g} inside a degenerate block cannot be compensated"
        )
    gaps = p[:, None] - p[None, :]
    h = np.zeros_like(dm)
    off = ~in_block
    h[off] = 1j * dm[off] / gaps[off]
    h = v @ h @ v.conj().T
    return (h + h.conj().T) / 2


def rho_epsilon(epsilon: float, sign: int = +1) -> np.ndarray:
    """Non-degenerate neighbour of the optimal Psi state that keeps the n = 2 moment zero."""
    if not 0.0 <= epsilon <= 0.5:
        raise ValidationError(f"epsilon must lie in [0, 0.5], got {epsilon}")
    if sign not in (+1, -1):
        raise ValidationError("sign must be +1 or -1")
    ground = qcore.projector(qcore.basis_state("00"))
    psi = bell_state("psi+" if sign > 0 else "psi-")
    e2 = epsilon * epsilon
    cross = np.outer(qcore.basis_state("00"), psi.conj())
    m = (
        rho_star(sign)
        + 1.5 * e2 * ground
        - 0.5 * e2 * qcore.projector(psi)
        - sign * epsilon * math.sqrt(1 - e2) * (cross + cross.conj().T)
    )
    return m / (1 + e2)


@dataclass(frozen=True)
class LagrangeResult:
    r: np.ndarray
    lam: float
    value: float
    min_eigenvalue: float
    valid: bool
    roots: tuple[float, ...] = field(default=())
    gradient_residual: float = 0.0
    constraint_residual: float = 0.0

    @property
    def state(self) -> np.ndarray:
        return qcore.from_bloch(self.r)


def _lambda_grid(gamma: float, brackets: int) -> np.ndarray:
    mags = np.logspace(-3, 3, brackets + 1) / gamma
    return np.concatenate([-mags[::-1], mags])


def maximize_linear_objective(
    r_x: np.ndarray,
    q: QuadricForm,
    brackets: int = 400,
    validity_tol: float = 1e-9,
) -> LagrangeResult:
    """Maximize Tr[rho_X rho] = (1 + r_X . r)/4 on the quadric r . (D r + c) = 0.

    Stationarity of r_X . r - lambda r . (D r + c) gives
    r*(lambda) = (2D)^-1 (r_X/lambda - c); the scalar constraint g(lambda) is
    bracketed on a signed log grid, every root refined, and the root with the
    largest objective returned (ties go to the smallest |lambda|).
    """
    r_x = np.asarray(r_x, dtype=float)
    if r_x.shape != (15,):
        raise ValidationError("objective must be a 15-component Bloch vector")
    two_d = 2 * q.d
    if np.linalg.matrix_rank(two_d, tol=1e-12 * max(1.0, np.abs(two_d).max())) < 15:
        raise SingularConstraintMatrix("quadric matrix is not invertible")
    inv = np.linalg.inv(two_d)
    a, b = inv @ r_x, inv @ q.c

    def r_of(lam: float) -> np.ndarray:
        return a / lam - b

    def g(lam: float) -> float:
        return q(r_of(lam))

    gamma = q.gamma or float(np.max(np.abs(q.d)))
    grid = _lambda_grid(gamma, brackets)
    values = [g(x) for x in grid]
    roots = []
    for k in range(len(grid) - 1):
        lo, hi = grid[k], grid[k + 1]
        if lo < 0 < hi:
            continue
        if values[k] == 0.0:
            roots.append(float(lo))
        elif values[k] * values[k + 1] < 0:
            roots.append(brentq(g, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise NoRoot("constraint has no sign change on the multiplier grid")

    def objective(lam: float) -> float:
        return (1 + r_x @ r_of(lam)) / 4

    best = max(roots, key=lambda lam: (objective(lam), -abs(lam)))
    r = r_of(best)
    lam_min = float(np.linalg.eigvalsh(qcore.from_bloch(r))[0])
    grad = r_x - best * (two_d @ r + q.c)
    return LagrangeResult(
        r=r,
        lam=float(best),
        value=float(objective(best)),
        min_eigenvalue=lam_min,
        valid=lam_min >= -validity_tol,
        roots=tuple(sorted(roots)),
        gradient_residual=float(np.max(np.abs(grad))),
        constraint_residual=abs(g(best)),
    )


def sample_stabilizable_state(channel: LindbladChannel, rng: np.random.Generator) -> np.ndarray:
    """Random state with every moment residual zero to rounding.

    For a Haar basis {|a>} the populations p solving sum_b T_ab p_b = 0 with
    T_ab = <a|D(|b><b|)|a> make the diagonal of D(rho) vanish in that basis,
    which kills Tr[rho^(n-1) D(rho)] for all n at once.
    """
    d = channel.dim
    if d is None:
        raise ValidationError("channel has no operators")
    u = unitary_group.rvs(d, random_state=rng)
    t = np.empty((d, d))
    for b in range(d):
        img = u.conj().T @ dissipator_apply(channel, qcore.projector(u[:, b])) @ u
        t[:, b] = np.diag(img).real
    null = qcore.nullspace(t, 1e-12)
    if len(null) != 1:
        raise NotStabilizable(f"population balance has {len(null)} solutions")
    p = null[0].real
    p = np.clip(p / p.sum(), 0.0, None)
    p /= p.sum()
    rho = (u * p) @ u.conj().T
    return (rho + rho.conj().T) / 2
