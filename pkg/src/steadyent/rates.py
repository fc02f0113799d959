"""Rate-equation picture of the steady state when the Hamiltonian dominates.

If the coherent dynamics is much faster than dissipation, the stationary
state is diagonal in an eigenbasis {|a>} of H and its populations p_a obey
a classical master equation with transition rates
M_ab = sum_k gamma_k |<b|L_k|a>|^2 (flow from a to b).
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import qcore
from .dynamics import LindbladChannel
from .errors import NonUniqueWeights, SolverError, ValidationError

NULL_TOL = 1e-10
NEGATIVE_CLAMP = 1e-12


@dataclass(frozen=True)
class RateMatrix:
    m: np.ndarray  # m[a, b] = rate from eigenstate a to eigenstate b
    basis: np.ndarray  # eigenvectors as columns, ascending energy
    energies: np.ndarray

    def to_csv(self) -> str:
        """``alpha,beta,rate`` rows (1-based labels), zero rates omitted."""
        buf = io.StringIO()
        buf.write("alpha,beta,rate\n")
        for a, b in zip(*np.nonzero(self.m)):
            buf.write(f"{a + 1},{b + 1},{self.m[a, b]:.17g}\n")
        return buf.getvalue()


def _blocks(values: np.ndarray, tol: float) -> list[list[int]]:
    blocks = [[0]]
    for k in range(1, len(values)):
        if values[k] - values[k - 1] <= tol:
            blocks[-1].append(k)
        else:
            blocks.append([k])
    return blocks


def _resolve(vectors: np.ndarray, operators: list[np.ndarray], tol: float) -> np.ndarray:
    """Rotate a degenerate subspace to diagonalize each operator in turn.

    Later operators only split what earlier ones left degenerate.
    """
    if vectors.shape[1] < 2 or not operators:
        return vectors
    op, rest = operators[0], operators[1:]
    sub = vectors.conj().T @ op @ vectors
    w, u = np.linalg.eigh((sub + sub.conj().T) / 2)
    rotated = vectors @ u
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    out = []
    for block in _blocks(w, tol * scale):
        out.append(_resolve(rotated[:, block], rest, tol))
    return np.hstack(out)


def hamiltonian_eigenbasis(
    h: np.ndarray,
    channel: LindbladChannel,
    perturbation: np.ndarray | None = None,
    degeneracy_tol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and a definite eigenbasis of h.

    Degenerate eigenspaces are fixed first by ``perturbation`` (if given),
    then by sum_k gamma_k L_k^dag L_k.
    """
    energies, vectors = qcore.hermitian_eig(h)
    tol = degeneracy_tol * max(1.0, float(np.max(np.abs(energies))))
    decay = sum((g * L.conj().T @ L for L, g in channel), np.zeros_like(h, dtype=complex))
    ops = ([perturbation] if perturbation is not None else []) + [decay]
    cols = [_resolve(vectors[:, b], ops, degeneracy_tol) for b in _blocks(energies, tol)]
    return energies, np.hstack(cols)


def transition_matrix(
    h: np.ndarray,
    channel: LindbladChannel,
    perturbation: np.ndarray | None = None,
) -> RateMatrix:
    h = qcore.check_finite(h)
    if not qcore.is_hermitian(h, 1e-10 * max(1.0, np.abs(h).max())):
        raise ValidationError("Hamiltonian is not Hermitian")
    energies, v = hamiltonian_eigenbasis(h, channel, perturbation)
    m = np.zeros(h.shape)
    for L, g in channel:
        amp = v.conj().T @ L @ v  # amp[b, a] = <b|L|a>
        m += g * np.abs(amp.T) ** 2
    return RateMatrix(m, v, energies)


def rate_matrix_P(m: RateMatrix | np.ndarray) -> np.ndarray:
    """P_ab = M_ab - delta_ab sum_b' M_ab'; rows sum to zero."""
    mat = np.asarray(m.m if isinstance(m, RateMatrix) else m, dtype=float)
    p = mat.copy()
    p[np.diag_indices_from(p)] -= mat.sum(axis=1)
    return p


def _check_generator(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError("rate generator must be square")
    scale = max(1.0, float(np.max(np.abs(p))))
    if np.max(np.abs(p.sum(axis=1))) > 1e-10 * scale:
        raise ValidationError("rows of the rate generator must sum to zero")
    return p


def stationary_weights(p_matrix: np.ndarray) -> np.ndarray:
    """Populations with sum_a p_a P_ab = 0, normalized to one."""
    p = _check_generator(p_matrix)
    null = qcore.nullspace(p.T, NULL_TOL)
    if len(null) != 1:
        raise NonUniqueWeights(f"rate equation has {len(null)} stationary solutions")
    w = null[0].real
    w = w / w.sum()
    if np.min(w) < -1e-9:
        raise SolverError(f"stationary weights have a negative entry {np.min(w):.3g}")
    w[w < NEGATIVE_CLAMP] = 0.0
    return w / w.sum()


def rate_spectral_gap(p_matrix: np.ndarray) -> float:
    """Smallest nonzero relaxation rate |Re lambda| of the rate generator."""
    p = _check_generator(p_matrix)
    decay = np.sort(np.abs(np.linalg.eigvals(p).real))
    scale = max(1.0, float(np.max(np.abs(p))))
    if decay.size > 1 and decay[1] <= NULL_TOL * scale:
        raise NonUniqueWeights("rate generator has more than one stationary mode")
    return float(decay[1]) if decay.size > 1 else 0.0


def perturbative_steady_state(
    h: np.ndarray,
    channel: LindbladChannel,
    perturbation: np.ndarray | None = None,
) -> np.ndarray:
    """sum_a p_a |a><a| with weights from the rate equation."""
    rm = transition_matrix(h, channel, perturbation)
    w = stationary_weights(rate_matrix_P(rm))
    rho = (rm.basis * w) @ rm.basis.conj().T
    return (rho + rho.conj().T) / 2
