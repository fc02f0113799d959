"""Entanglement measures: Wootters concurrence, Bell fidelities, Schmidt
structure, and the N-qubit concurrence with a convex-roof upper bound."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import unitary_group

from . import qcore
from .dynamics import LindbladChannel
from .errors import ValidationError

_SQRT_HALF = math.sqrt(0.5)


class BellLabel(str, enum.Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"


def bell_state(which: BellLabel | str) -> np.ndarray:
    """Phi_pm = (|11> pm |00>)/sqrt2, Psi_pm = (|10> pm |01>)/sqrt2."""
    which = BellLabel(which)
    v = np.zeros(4, dtype=complex)
    if which in (BellLabel.PHI_PLUS, BellLabel.PHI_MINUS):
        v[3] = _SQRT_HALF
        v[0] = _SQRT_HALF if which is BellLabel.PHI_PLUS else -_SQRT_HALF
    else:
        v[2] = _SQRT_HALF
        v[1] = _SQRT_HALF if which is BellLabel.PSI_PLUS else -_SQRT_HALF
    return v


def _two_qubit_state(rho) -> np.ndarray:
    rho = qcore.check_density_matrix(rho)
    if rho.shape != (4, 4):
        raise ValidationError(f"expected a two-qubit state, got shape {rho.shape}")
    return rho


_YY = np.kron(qcore.pauli(2), qcore.pauli(2))
# eigenvalues of rho this far below the largest are rounding noise
_RANK_TOL = 1e-13


def concurrence2(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The square roots of the spin-flip spectrum are the singular values of
    ``X^T (Y x Y) X`` with ``rho = X X^dag``. Unlike the spectrum of
    ``sqrt(rho) (Y x Y) conj(rho) (Y x Y) sqrt(rho)`` this never takes square
    roots of rounding noise, so rank-deficient states stay exact.
    """
    rho = _two_qubit_state(rho)
    w, v = np.linalg.eigh(rho)
    keep = w > _RANK_TOL * max(w[-1], 1e-300)
    x = v[:, keep] * np.sqrt(w[keep])
    roots = np.zeros(4)
    sv = np.linalg.svd(x.T @ _YY @ x, compute_uv=False)
    roots[: sv.size] = sv
    c = roots[0] - roots[1] - roots[2] - roots[3]
    return float(min(1.0, max(0.0, c)))


def bell_fidelity(rho: np.ndarray, which: BellLabel | str) -> float:
    rho = _two_qubit_state(rho)
    b = bell_state(which)
    return float(np.real(b.conj() @ rho @ b))


def bell_fidelities(rho: np.ndarray) -> dict[str, float]:
    return {label.value: bell_fidelity(rho, label) for label in BellLabel}


def _bipartition_matrix(psi: np.ndarray, part: Sequence[int]) -> np.ndarray:
    n = qcore.n_qubits(psi)
    part = sorted(set(part))
    if not part or len(part) >= n or any(not 0 <= q < n for q in part):
        raise ValidationError(f"invalid bipartition {part!r} for {n} qubits")
    rest = [q for q in range(n) if q not in part]
    t = psi.reshape([2] * n).transpose(part + rest)
    return t.reshape(2 ** len(part), 2 ** len(rest))


def schmidt_coefficients(psi: np.ndarray, bipartition: Sequence[int]) -> np.ndarray:
    """Descending Schmidt coefficients of ``psi`` across ``bipartition | rest``."""
    psi = qcore.check_normalized(psi)
    return np.linalg.svd(_bipartition_matrix(psi, bipartition), compute_uv=False)


def is_separable_pure(psi: np.ndarray, bipartition: Sequence[int], tol: float = 1e-8) -> bool:
    coeffs = schmidt_coefficients(psi, bipartition)
    return bool(coeffs.size < 2 or coeffs[1] <= tol)


@dataclass(frozen=True)
class EigenstateReport:
    is_eigenstate: bool
    eigenvalues: tuple[complex, ...]
    residuals: tuple[float, ...]


def is_eigenstate_of_lindblads(psi: np.ndarray, channel: LindbladChannel, tol: float = 1e-10) -> EigenstateReport:
    """Check ``L_k psi = (psi^dag L_k psi) psi`` for every Lindblad operator."""
    psi = qcore.check_normalized(psi)
    vals, res = [], []
    for L, _ in channel:
        lp = L @ psi
        ev = complex(psi.conj() @ lp)
        vals.append(ev)
        res.append(float(np.linalg.norm(lp - ev * psi)))
    return EigenstateReport(all(r <= tol for r in res), tuple(vals), tuple(res))


def multipartite_concurrence_pure(psi: np.ndarray) -> float:
    """C_N = 2^(1 - N/2) sqrt((2^N - 2) - sum_gamma Tr rho_gamma^2).

    The sum runs over all 2^N - 2 non-trivial reduced states.
    """
    psi = qcore.check_normalized(psi)
    n = qcore.n_qubits(psi)
    if not 2 <= n <= 6:
        raise ValidationError(f"N must be in 2..6, got {n}")
    return _c_n(psi, n, qcore.subsets(n))


def _c_n(psi: np.ndarray, n: int, parts) -> float:
    total = 0.0
    for part in parts:
        s = np.linalg.svd(_bipartition_matrix(psi, part), compute_uv=False)
        total += float(np.sum(s**4))
    val = (2**n - 2) - total
    return 2.0 ** (1 - n / 2) * math.sqrt(max(val, 0.0))


def _ensemble_value(vectors: np.ndarray, n: int, parts) -> float:
    """sum_i q_i C_N(psi_i) for unnormalized rows psi~_i, q_i = |psi~_i|^2."""
    total = 0.0
    for v in vectors:
        q = float(np.real(np.vdot(v, v)))
        if q < 1e-15:
            continue
        total += q * _c_n(v / math.sqrt(q), n, parts)
    return total


def _givens(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -np.exp(1j * phi) * s], [np.exp(-1j * phi) * s, c]])


def _coordinate_descent(vectors: np.ndarray, n: int, parts, sweeps: int, tol: float) -> float:
    value = _ensemble_value(vectors, n, parts)
    m = vectors.shape[0]
    for _ in range(sweeps):
        start = value
        for i in range(m):
            for j in range(i + 1, m):
                pair = vectors[[i, j]]
                base = _ensemble_value(pair, n, parts)

                def local(x, pair=pair):
                    return _ensemble_value(_givens(x[0], x[1]) @ pair, n, parts)

                res = minimize(local, np.zeros(2), method="Nelder-Mead",
                               options={"xatol": 1e-7, "fatol": 1e-11, "maxiter": 200})
                if res.fun < base - 1e-14:
                    vectors[[i, j]] = _givens(res.x[0], res.x[1]) @ pair
                    value = value - base + res.fun
        if start - value < tol:
            break
    return _ensemble_value(vectors, n, parts)


def multipartite_concurrence_mixed(
    rho: np.ndarray,
    budget: int = 8,
    seed: int = 0,
    sweeps: int = 20,
    tol: float = 1e-10,
) -> float:
    """Convex-roof upper bound on the N-qubit concurrence of a mixed state.

    Decompositions ``psi~_i = sum_k U_ik sqrt(lambda_k) e_k`` are generated
    from the eigen-ensemble of rho by unitary mixing. Restart 0 is the
    eigen-ensemble itself; restart k >= 1 starts from a Haar unitary drawn
    from a Philox stream keyed by (seed, k) and is refined by coordinate
    descent over Givens rotations. The minimum over restarts is returned, so
    the bound never increases with ``budget``. This is an upper bound only.
    """
    rho = qcore.check_density_matrix(rho)
    n = qcore.n_qubits(rho)
    if not 2 <= n <= 4:
        raise ValidationError(f"N must be in 2..4, got {n}")
    if budget < 1:
        raise ValidationError("budget must be at least 1")
    parts = qcore.subsets(n)
    w, v = np.linalg.eigh(rho)
    keep = w > 1e-12
    rank = int(np.sum(keep))
    ensemble = (v[:, keep] * np.sqrt(w[keep])).T  # rows are sqrt(lambda_k) e_k
    if rank == 1:
        return _ensemble_value(ensemble, n, parts)
    m = 2 * rank
    padded = np.zeros((m, rho.shape[0]), dtype=complex)
    padded[:rank] = ensemble

    best = _coordinate_descent(ensemble.copy(), n, parts, sweeps, tol)
    for k in range(1, budget):
        rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 1, k]))
        u = unitary_group.rvs(m, random_state=rng)
        best = min(best, _coordinate_descent(u @ padded, n, parts, sweeps, tol))
    return best
