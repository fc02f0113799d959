"""Dense linear-algebra primitives for multi-qubit operators.

Operators are plain complex ``numpy`` arrays of shape ``(2**n, 2**n)``.
Qubit 0 is the slowest-varying tensor factor, so ``|q0 q1 ... q_{n-1}>``
has index ``sum(q_k * 2**(n-1-k))``.

Pauli convention: ``sigma_z|1> = +|1>``, ``sigma_z|0> = -|0>`` and the
lowering operator ``sigma_- = |0><1|`` maps the excited state onto the
decay sink ``|0>``.  ``sigma_y`` is fixed by ``sigma_- = (sigma_x - i sigma_y)/2``.

Vectorization is column-stacking: ``vec(X rho Y) = (Y^T kron X) vec(rho)``.
"""
from __future__ import annotations

import itertools
import json
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

MAX_QUBITS = 8

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[-1, 0], [0, 1]], dtype=complex),
)

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()


def pauli(i: int) -> np.ndarray:
    """Return sigma_i for i in {0, 1, 2, 3} (identity, x, y, z)."""
    if i not in (0, 1, 2, 3):
        raise ValidationError(f"Pauli index must be 0..3, got {i!r}")
    return _PAULIS[i].copy()


def n_qubits(m: np.ndarray) -> int:
    """Number of qubits of a square operator or a state vector."""
    m = np.asarray(m)
    d = m.shape[0]
    if m.ndim == 2 and m.shape[1] != d:
        raise ValidationError(f"operator must be square, got shape {m.shape}")
    n = int(round(np.log2(d))) if d > 0 else -1
    if n < 0 or 2**n != d:
        raise ValidationError(f"dimension {d} is not a power of two")
    return n


def kron(*ops: np.ndarray, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """Tensor product of operators (or state vectors), left to right."""
    if not ops:
        raise ValidationError("kron needs at least one operand")
    total = sum(n_qubits(o) for o in ops)
    if total > max_qubits:
        raise ValidationError(f"{total} qubits exceeds the cap of {max_qubits}")
    out = np.asarray(ops[0], dtype=complex)
    for o in ops[1:]:
        out = np.kron(out, np.asarray(o, dtype=complex))
    return out


def local_operator(single: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-qubit operator on ``site`` of an n-qubit register."""
    if not 0 <= site < n:
        raise ValidationError(f"site {site} outside 0..{n - 1}")
    factors = [np.eye(2, dtype=complex)] * n
    factors[site] = np.asarray(single, dtype=complex)
    return kron(*factors)


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis ket, e.g. ``basis_state("01")``."""
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits) or not bits:
        raise ValidationError(f"invalid bit string {bits!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)), 2)] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def dag(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def check_finite(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises ``ValidationError`` unless rho is Hermitian (1e-12), unit-trace
    (1e-10) and positive semidefinite (smallest eigenvalue >= -1e-10).
    """
    rho = check_finite(rho)
    n_qubits(rho)
    if rho.ndim != 2:
        raise ValidationError("density matrix must be 2-D")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise ValidationError(f"density matrix not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -POSITIVITY_TOL:
        raise ValidationError(f"density matrix has negative eigenvalue {lam_min:.3g}")
    return rho


def check_normalized(psi: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    psi = check_finite(psi).ravel()
    n_qubits(psi)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"state vector has norm {norm!r}")
    return psi


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (in the given order)."""
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits(rho)
    keep = list(keep)
    if not keep or len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise ValidationError(f"invalid qubit subset {keep!r} for {n} qubits")
    rest = [q for q in range(n) if q not in keep]
    t = rho.reshape([2] * (2 * n))
    order = keep + rest
    t = t.transpose(order + [n + q for q in order])
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ajbj->ab", t)


def pauli_string(i: int, j: int) -> np.ndarray:
    return np.kron(_PAULIS[i], _PAULIS[j])


# Bloch label a = 4 i + j  <->  sigma_i (qubit 0)  kron  sigma_j (qubit 1)
_BLOCH_BASIS = np.array([pauli_string(a // 4, a % 4) for a in range(16)])


def to_bloch(rho: np.ndarray) -> np.ndarray:
    """15-component generalized Bloch vector, r_a = Tr[(sigma_i x sigma_j) rho].

    Component ``a`` (label 1..15) is stored at array index ``a - 1``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"to_bloch needs a two-qubit operator, got shape {rho.shape}")
    r = np.einsum("aij,ji->a", _BLOCH_BASIS[1:], rho)
    return r.real.copy()


def from_bloch(r: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_bloch`; the result is Hermitian with unit trace
    but need not be positive."""
    r = np.asarray(r, dtype=float)
    if r.shape != (15,):
        raise ValidationError(f"Bloch vector must have 15 components, got {r.shape}")
    m = _BLOCH_BASIS[0] + np.einsum("a,aij->ij", r, _BLOCH_BASIS[1:])
    return m / 4.0


def hermitian_eig(m: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns."""
    m = check_finite(m)
    if not is_hermitian(m, tol):
        raise ValidationError("hermitian_eig called on a non-Hermitian matrix")
    return np.linalg.eigh((m + m.conj().T) / 2)


def nullspace(m: np.ndarray, tol: float = 1e-10) -> list[np.ndarray]:
    """Orthonormal basis of the numerical null space.

    A right-singular vector counts when its singular value is at most
    ``tol`` times the largest singular value.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    m = check_finite(m)
    if m.size == 0:
        return []
    _, s, vh = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return [row.conj() for row in np.eye(m.shape[1], dtype=complex)]
    n_small = int(np.sum(s <= tol * smax)) + (m.shape[1] - s.size)
    return [vh[k].conj() for k in range(m.shape[1] - n_small, m.shape[1])]


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d, order="F")


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + dag(diff)) / 2))))


def sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + dag(rho)) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dag(v)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))**2."""
    s = sqrtm_psd(sigma)
    inner = s @ rho @ s
    w = np.linalg.eigvalsh((inner + dag(inner)) / 2)
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def subsets(n: int) -> list[tuple[int, ...]]:
    """All non-empty proper subsets of range(n), shortest first, then lexicographic."""
    out = []
    for size in range(1, n):
        out.extend(itertools.combinations(range(n), size))
    return out


# ---- matrix JSON ---------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        d = int(obj["dim"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValidationError(f"matrix JSON entries do not match dim={d}")
    return check_finite(re + 1j * im)


def dumps_matrix(m: np.ndarray) -> str:
    # json emits repr() floats, i.e. the shortest round-tripping form (<= 17 digits)
    return json.dumps(matrix_to_json(m))
