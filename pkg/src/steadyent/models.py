"""Hamiltonian families, special states and spectral sweeps."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import golden

from . import qcore
from .dynamics import LindbladChannel
from .entanglement import bell_state
from .errors import ValidationError

_I2 = np.eye(2, dtype=complex)
_SX, _SY, _SZ = qcore.pauli(1), qcore.pauli(2), qcore.pauli(3)
_SM, _SP = qcore.SIGMA_MINUS, qcore.SIGMA_PLUS
_EXCHANGE = np.kron(_SP, _SM) + np.kron(_SM, _SP)


# ---- Ising and XXZ ----------------------------------------------------------


@dataclass(frozen=True)
class IsingParams:
    delta: float
    j: float
    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValidationError("gamma must be nonnegative")


def ising_hamiltonian(p: IsingParams) -> np.ndarray:
    """(delta/2)(1 x Z + Z x 1) + j X x X."""
    return p.delta / 2 * (np.kron(_I2, _SZ) + np.kron(_SZ, _I2)) + p.j * np.kron(_SX, _SX)


def ising_x(p: IsingParams) -> complex:
    """Complex parameter of the closed-form Ising steady state.

    With sigma_z|0> = -|0> and the dissipator normalized as
    gamma (L rho L^dag - {L^dag L, rho}/2), x = (-delta + i gamma/2)/j.
    """
    if p.j == 0:
        raise ValidationError("closed form needs a nonzero coupling j")
    return complex(-p.delta, p.gamma / 2) / p.j


def ising_state_from_x(x: complex) -> np.ndarray:
    ax2 = abs(x) ** 2
    rho = np.eye(4, dtype=complex) / 4
    rho[0, 0] += ax2
    rho[0, 3] += x / 2
    rho[3, 0] += np.conj(x) / 2
    return rho / (1 + ax2)


def ising_steady_state_closed_form(p: IsingParams) -> np.ndarray:
    return ising_state_from_x(ising_x(p))


def ising_concurrence(x_abs: float) -> float:
    x_abs = abs(x_abs)
    return max(0.0, (x_abs - 0.5) / (1 + x_abs**2))


def ising_fidelities(x: complex) -> dict[str, float]:
    denom = 4 * (1 + abs(x) ** 2)
    re = complex(x).real
    return {
        "phi+": 0.5 + (2 * re - 1) / denom,
        "phi-": 0.5 + (-2 * re - 1) / denom,
        "psi+": 1 / denom,
        "psi-": 1 / denom,
    }


def xxz_hamiltonian(delta: float, j: float, alpha: float) -> np.ndarray:
    zz = np.kron(_SZ, _SZ)
    return delta / 2 * (np.kron(_I2, _SZ) + np.kron(_SZ, _I2)) + j * (
        np.kron(_SX, _SX) + np.kron(_SY, _SY) + alpha * zz
    )


# ---- optimal Hamiltonians -----------------------------------------------------


def optimal_h2(delta: float, f: float, j: float, sign: int = +1) -> np.ndarray:
    """Two-qubit drive-plus-exchange Hamiltonian whose steady state at j = -delta
    approaches the optimal Psi mixture (Psi+ for sign=+1, Psi- for sign=-1)."""
    if sign not in (+1, -1):
        raise ValidationError("sign must be +1 or -1")
    local = delta / 2 * _SZ
    return (
        np.kron(_I2, local + f / 2 * _SX)
        + np.kron(local + sign * f / 2 * _SX, _I2)
        + sign * j * _EXCHANGE
    )


def collective_spin(n_qubits: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Total spin (S_x, S_y, S_z) = sum_k sigma^(k)/2."""
    if not 1 <= n_qubits <= qcore.MAX_QUBITS:
        raise ValidationError(f"n_qubits out of range: {n_qubits}")
    return tuple(
        sum(qcore.local_operator(s, k, n_qubits) for k in range(n_qubits)) / 2
        for s in (_SX, _SY, _SZ)
    )


def optimal_hN(n_qubits: int, delta: float, f: float, j: float) -> np.ndarray:
    """N-qubit generalization: local drive on every site, all-to-all exchange."""
    if not 2 <= n_qubits <= 6:
        raise ValidationError(f"n_qubits must be in 2..6, got {n_qubits}")
    n = n_qubits
    h = sum(qcore.local_operator(delta / 2 * _SZ + f / 2 * _SX, k, n) for k in range(n))
    for a in range(n):
        for b in range(a + 1, n):
            sp_a = qcore.local_operator(_SP, a, n)
            sm_a = qcore.local_operator(_SM, a, n)
            sp_b = qcore.local_operator(_SP, b, n)
            sm_b = qcore.local_operator(_SM, b, n)
            h = h + j * (sp_a @ sm_b + sm_a @ sp_b)
    return h


def optimal_hN_collective(n_qubits: int, delta: float, f: float, j: float) -> np.ndarray:
    """delta S_z + f S_x + j (S^2 - S_z^2 - N/2)."""
    sx, sy, sz = collective_spin(n_qubits)
    s2 = sx @ sx + sy @ sy + sz @ sz
    return delta * sz + f * sx + j * (s2 - sz @ sz - n_qubits / 2 * np.eye(2**n_qubits))


def _check_lm(l: float, m: float, n_qubits: int | None = None):
    if l < 0 or not float(2 * l).is_integer():
        raise ValidationError(f"l must be a nonnegative multiple of 1/2, got {l}")
    if n_qubits is not None:
        if l > n_qubits / 2 or not float(n_qubits / 2 - l).is_integer():
            raise ValidationError(f"l={l} not allowed for {n_qubits} qubits")
    if abs(m) > l or not float(l - m).is_integer():
        raise ValidationError(f"m={m} not allowed for l={l}")


def energy_lm(l: float, m: float, delta: float, j: float, n_qubits: int) -> float:
    _check_lm(l, m, n_qubits)
    return m * delta + j * (l * (l + 1) - m * m - n_qubits / 2)


def sx_matrix_element(l: float, m_to: float, m_from: float) -> float:
    """<l, m_to|(S_+ + S_-)|l, m_from>."""
    _check_lm(l, m_from)
    _check_lm(l, m_to)
    m = m_from
    if m_to == m + 1:
        return math.sqrt((l - m) * (l + m + 1))
    if m_to == m - 1:
        return math.sqrt((l + m) * (l - m + 1))
    return 0.0


def spin_multiplicity(n_qubits: int, l: float) -> int:
    """Number of spin-l multiplets in N spin-1/2 particles."""
    k = int(round(n_qubits / 2 - l))
    return math.comb(n_qubits, k) - (math.comb(n_qubits, k - 1) if k >= 1 else 0)


def allowed_l(n_qubits: int) -> list[float]:
    top = n_qubits / 2
    return [top - k for k in range(int(math.floor(top)) + 1)]


def collective_spectrum(n_qubits: int, delta: float, j: float) -> np.ndarray:
    """Ascending F = 0 spectrum from the (l, m) formula with multiplicities."""
    out = []
    for l in allowed_l(n_qubits):
        mult = spin_multiplicity(n_qubits, l)
        for k in range(int(round(2 * l)) + 1):
            out.extend([energy_lm(l, -l + k, delta, j, n_qubits)] * mult)
    return np.sort(np.array(out))


# ---- random and engineered -----------------------------------------------------


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def gue_sample(dim: int, j_scale: float, rng) -> np.ndarray:
    """H = j (X + iY)/2 + h.c. with X, Y real standard-normal matrices."""
    if dim < 2:
        raise ValidationError("dim must be at least 2")
    g = _generator(rng)
    x = g.standard_normal((dim, dim))
    y = g.standard_normal((dim, dim))
    a = j_scale * (x + 1j * y) / 2
    return a + a.conj().T


def ground_to_target_unitary(psi: np.ndarray) -> np.ndarray:
    """Unitary U with U|0...0> = psi, built from one Householder reflection.

    The phase of psi's first amplitude is split off so that the reflection
    vector is well defined; U is the identity when psi = |0...0>.
    """
    psi = qcore.check_normalized(psi)
    d = psi.size
    phase = np.exp(1j * np.angle(psi[0])) if abs(psi[0]) > 0 else 1.0
    w = -psi / phase
    w[0] += 1.0
    norm2 = float(np.real(np.vdot(w, w)))
    eye = np.eye(d, dtype=complex)
    if norm2 < 1e-30:
        return phase * eye
    return phase * (eye - 2 * np.outer(w, w.conj()) / norm2)


def engineered_lindblads(psi: np.ndarray, gamma: float) -> LindbladChannel:
    """L_k = U sigma_-^(k) U^dag, which makes psi the unique dark state."""
    u = ground_to_target_unitary(psi)
    n = qcore.n_qubits(u)
    return LindbladChannel(
        tuple((u @ qcore.local_operator(_SM, k, n) @ u.conj().T, gamma) for k in range(n))
    )


# ---- special states -------------------------------------------------------------


def example3_hamiltonian() -> np.ndarray:
    """Three-qubit coupling (A = qubit 0) whose decay of A alone leaves |0>|Psi->."""
    zero, one = qcore.basis_state("0"), qcore.basis_state("1")
    links = (("phi+", "phi-"), ("phi-", "psi+"), ("psi+", "psi-"))
    h = np.zeros((8, 8), dtype=complex)
    for low, high in links:
        h += np.outer(np.kron(zero, bell_state(low)), np.kron(one, bell_state(high)).conj())
    return h + h.conj().T


def rho_star(sign: int = +1) -> np.ndarray:
    """Half ground state, half Psi+ (sign=+1) or Psi- (sign=-1)."""
    if sign not in (+1, -1):
        raise ValidationError("sign must be +1 or -1")
    psi = bell_state("psi+" if sign > 0 else "psi-")
    return 0.5 * qcore.projector(qcore.basis_state("00")) + 0.5 * qcore.projector(psi)


def w_state(n: int) -> np.ndarray:
    if n < 2:
        raise ValidationError("W state needs n >= 2")
    v = np.zeros(2**n, dtype=complex)
    for k in range(n):
        v[1 << (n - 1 - k)] = 1.0
    return v / math.sqrt(n)


def target_mixture_N(n: int) -> np.ndarray:
    """Equal mixture of |0...0> and the W state."""
    ground = np.zeros(2**n, dtype=complex)
    ground[0] = 1.0
    return 0.5 * qcore.projector(ground) + 0.5 * qcore.projector(w_state(n))


def phi_star(sign: int = +1) -> np.ndarray:
    """Unit-trace Hermitian (not positive) optimum of the Phi fidelity on the quadric."""
    m = np.eye(4, dtype=complex)
    m[0, 0] += 9
    m[3, 3] -= 1
    m[0, 3] = m[3, 0] = 3 * sign
    return m / 12


# ---- spectra --------------------------------------------------------------------


@dataclass
class SpectrumTable:
    j: np.ndarray
    energies: np.ndarray  # rows ascending eigenvalues, one row per j
    factory: Callable[[float], np.ndarray] | None = field(default=None, repr=False, compare=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        k = self.energies.shape[1]
        buf.write("j," + ",".join(f"e{i + 1}" for i in range(k)) + "\n")
        for jv, row in zip(self.j, self.energies):
            buf.write(",".join(f"{x:.17g}" for x in (jv, *row)) + "\n")
        return buf.getvalue()


def spectrum_sweep(h_factory: Callable[[float], np.ndarray], j_values: Sequence[float]) -> SpectrumTable:
    j = np.asarray(j_values, dtype=float)
    if j.ndim != 1 or j.size < 3:
        raise ValidationError("need at least three j values")
    if np.any(np.diff(j) <= 0):
        raise ValidationError("j values must be strictly increasing")
    rows = [np.linalg.eigvalsh(h_factory(float(x))) for x in j]
    return SpectrumTable(j, np.array(rows), h_factory)


def find_avoided_crossing(
    table: SpectrumTable,
    level_pair: tuple[int, int],
    h_factory: Callable[[float], np.ndarray] | None = None,
    xtol: float = 1e-10,
) -> tuple[float, float]:
    """Coupling value and size of the smallest gap between two adjacent levels.

    The grid minimum is refined by golden-section search between its
    neighbouring grid points, using ``h_factory`` (or the table's own).
    """
    lo, hi = sorted(level_pair)
    k_levels = table.energies.shape[1]
    if lo < 0 or hi >= k_levels or hi - lo != 1:
        raise ValidationError(f"level pair {level_pair} must be adjacent indices below {k_levels}")
    gaps = table.energies[:, hi] - table.energies[:, lo]
    k = int(np.argmin(gaps))
    factory = h_factory or table.factory
    if factory is None or k == 0 or k == len(gaps) - 1:
        return float(table.j[k]), float(gaps[k])

    def gap(x: float) -> float:
        e = np.linalg.eigvalsh(factory(x))
        return float(e[hi] - e[lo])

    a, b, c = table.j[k - 1], table.j[k], table.j[k + 1]
    if not (gap(b) < gap(a) and gap(b) < gap(c)):
        return float(b), float(gaps[k])
    j_star = float(golden(gap, brack=(a, b, c), tol=xtol))
    return j_star, gap(j_star)
