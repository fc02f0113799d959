"""Lindblad generators, stationary states and time propagation.

The generator is ``d rho/dt = -i[H, rho] + D(rho)`` with
``D(rho) = sum_k gamma_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import qcore
from .errors import NonUniqueSteadyState, NoSteadyState, SolverError, ValidationError

NULL_TOL = 1e-10
MAX_DENSE_QUBITS = 5
STEP_GUARD = 0.1


@dataclass(frozen=True)
class LindbladChannel:
    """Lindblad operators with their nonnegative rates."""

    terms: tuple[tuple[np.ndarray, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple((qcore.check_finite(L), float(g)) for L, g in self.terms)
        dims = {L.shape for L, _ in terms}
        if len(dims) > 1:
            raise ValidationError(f"Lindblad operators have mixed shapes {dims}")
        for L, g in terms:
            qcore.n_qubits(L)
            if g < 0 or not math.isfinite(g):
                raise ValidationError(f"rate must be finite and nonnegative, got {g}")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int | None:
        return self.terms[0][0].shape[0] if self.terms else None

    @property
    def gamma_max(self) -> float:
        return max((g for _, g in self.terms), default=0.0)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


@dataclass(frozen=True)
class LindbladModel:
    hamiltonian: np.ndarray
    channel: LindbladChannel

    def __post_init__(self):
        h = qcore.check_finite(self.hamiltonian)
        qcore.n_qubits(h)
        if not qcore.is_hermitian(h, 1e-12 * max(1.0, np.abs(h).max(initial=0.0))):
            raise ValidationError("Hamiltonian is not Hermitian")
        if self.channel.dim is not None and self.channel.dim != h.shape[0]:
            raise ValidationError(
                f"Hamiltonian dim {h.shape[0]} does not match channel dim {self.channel.dim}"
            )
        object.__setattr__(self, "hamiltonian", h)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def n_qubits(self) -> int:
        return qcore.n_qubits(self.hamiltonian)

    def to_json(self) -> dict:
        return {
            "hamiltonian": qcore.matrix_to_json(self.hamiltonian),
            "terms": [{"L": qcore.matrix_to_json(L), "gamma": g} for L, g in self.channel],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LindbladModel":
        try:
            h = qcore.matrix_from_json(obj["hamiltonian"])
            terms = [(qcore.matrix_from_json(t["L"]), float(t["gamma"])) for t in obj.get("terms", [])]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed model JSON: {exc}") from exc
        return cls(h, LindbladChannel(tuple(terms)))


def spontaneous_decay_channel(n_qubits: int, gamma: float) -> LindbladChannel:
    """sigma_- on every site, each at rate gamma."""
    if n_qubits < 1:
        raise ValidationError("need at least one qubit")
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    return LindbladChannel(
        tuple((qcore.local_operator(qcore.SIGMA_MINUS, k, n_qubits), gamma) for k in range(n_qubits))
    )


def dissipator_apply(channel: LindbladChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if channel.dim is not None and rho.shape != (channel.dim, channel.dim):
        raise ValidationError(f"state shape {rho.shape} does not match channel dim {channel.dim}")
    out = np.zeros_like(rho)
    for L, g in channel:
        if g == 0.0:
            continue
        LdL = L.conj().T @ L
        out += g * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def generator_apply(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    h = model.hamiltonian
    return -1j * (h @ rho - rho @ h) + dissipator_apply(model.channel, rho)


def _hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def _dissipator_superop(channel: LindbladChannel, d: int) -> np.ndarray:
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for L, g in channel:
        LdL = L.conj().T @ L
        out += g * (np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye))
    return out


def liouvillian_matrix(model: LindbladModel) -> np.ndarray:
    """d^2 x d^2 generator acting on column-stacked vec(rho)."""
    if model.n_qubits > MAX_DENSE_QUBITS:
        raise ValidationError(f"{model.n_qubits} qubits is too large for a dense Liouvillian")
    return _hamiltonian_superop(model.hamiltonian) + _dissipator_superop(model.channel, model.dim)


def _normalize_state(m: np.ndarray) -> np.ndarray:
    m = (m + m.conj().T) / 2
    return m / np.trace(m).real


def steady_state(model: LindbladModel, tol: float = NULL_TOL) -> np.ndarray:
    """Unique stationary state from the null space of the Liouvillian."""
    lv = liouvillian_matrix(model)
    null = qcore.nullspace(lv, tol)
    if not null:
        raise NoSteadyState("Liouvillian has no numerical null vector")
    if len(null) > 1:
        raise NonUniqueSteadyState(f"stationary space has dimension {len(null)}")
    m = qcore.unvec(null[0])
    # remove the arbitrary global phase before hermitizing
    tr = np.trace(m)
    if abs(tr) < 1e-14:
        raise NoSteadyState("null vector is traceless; not a state")
    rho = _normalize_state(m / tr)
    scale = max(np.linalg.norm(model.hamiltonian), model.channel.gamma_max, 1.0)
    resid = np.linalg.norm(generator_apply(model, rho))
    if resid > 1e-10 * scale:
        raise SolverError(f"steady-state residual {resid:.3g} above tolerance")
    return rho


def liouvillian_gap(model: LindbladModel) -> float:
    """Slowest asymptotic decay rate, min -Re(lambda) over nonzero eigenvalues."""
    if model.n_qubits > MAX_DENSE_QUBITS:
        raise ValidationError(f"gap computation limited to {MAX_DENSE_QUBITS} qubits")
    lv = liouvillian_matrix(model)
    lam = np.linalg.eigvals(lv)
    norm = np.linalg.norm(lv, 2)
    nonzero = lam[np.abs(lam) > 1e-9 * norm]
    if nonzero.size == lam.size:
        raise NoSteadyState("no stationary eigenvalue found")
    if nonzero.size == 0:
        return 0.0
    return float(np.min(-nonzero.real))


def _rk4(apply: Callable[[float, np.ndarray], np.ndarray], v: np.ndarray, t0: float, h: float):
    k1 = apply(t0, v)
    k2 = apply(t0 + h / 2, v + h / 2 * k1)
    k3 = apply(t0 + h / 2, v + h / 2 * k2)
    k4 = apply(t0 + h, v + h * k3)
    return v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _hermitize_vec(v: np.ndarray) -> np.ndarray:
    m = qcore.unvec(v)
    return qcore.vec((m + m.conj().T) / 2)


def _steps(t: float, dt: float) -> tuple[int, float]:
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if dt <= 0:
        raise ValidationError("dt must be positive")
    n = int(math.ceil(t / dt - 1e-12))
    return n, (t / n if n else 0.0)


def propagate(model: LindbladModel, rho0: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Fixed-step fourth-order Runge-Kutta integration of the master equation."""
    rho0 = np.asarray(rho0, dtype=complex)
    n, h = _steps(t, dt)
    if n == 0:
        return rho0.copy()
    lv = liouvillian_matrix(model)
    if np.linalg.norm(lv, 2) * h > STEP_GUARD:
        raise ValidationError(f"step {h:.3g} too large: ||L|| dt must not exceed {STEP_GUARD}")
    v = qcore.vec(rho0)
    apply = lambda _t, x: lv @ x  # noqa: E731
    for k in range(n):
        v = _hermitize_vec(_rk4(apply, v, k * h, h))
    return qcore.unvec(v)


def propagate_time_dependent(
    h_of_t: Callable[[float], np.ndarray],
    channel: LindbladChannel,
    rho0: np.ndarray,
    t: float,
    dt: float,
    period: float | None = None,
) -> np.ndarray:
    """RK4 integration with a time-dependent Hamiltonian.

    Stage Hamiltonians are evaluated at the start, midpoint and end of each
    step. If ``period`` is given the Hamiltonian is assumed periodic: the
    one-period propagator is integrated once and composed by matrix powers.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    diss = _dissipator_superop(channel, d)

    def superop(s: float) -> np.ndarray:
        hs = qcore.check_finite(h_of_t(s))
        if not qcore.is_hermitian(hs, 1e-12 * max(1.0, np.abs(hs).max())):
            raise ValidationError(f"callback returned a non-Hermitian operator at t={s}")
        return _hamiltonian_superop(hs) + diss

    def guard(lv: np.ndarray, h: float):
        if np.linalg.norm(lv, 2) * h > STEP_GUARD:
            raise ValidationError(f"step {h:.3g} too large: ||L|| dt must not exceed {STEP_GUARD}")

    def evolve(x: np.ndarray, t0: float, n: int, h: float) -> np.ndarray:
        # x is either one vec(rho) or a stack of them as columns
        for k in range(n):
            s = t0 + k * h
            l0, lm, l1 = superop(s), superop(s + h / 2), superop(s + h)
            guard(l0, h)
            k1 = l0 @ x
            k2 = lm @ (x + h / 2 * k1)
            k3 = lm @ (x + h / 2 * k2)
            k4 = l1 @ (x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    if period is None:
        n, h = _steps(t, dt)
        if n == 0:
            return rho0.copy()
        v = qcore.vec(rho0)
        for k in range(n):
            v = _hermitize_vec(evolve(v, k * h, 1, h))
        return qcore.unvec(v)

    if period <= 0:
        raise ValidationError("period must be positive")
    n_periods = int(math.floor(t / period))
    remainder = t - n_periods * period
    n_per, h_per = _steps(period, dt)
    one_period = evolve(np.eye(d * d, dtype=complex), 0.0, n_per, h_per)
    v = np.linalg.matrix_power(one_period, n_periods) @ qcore.vec(rho0)
    if remainder > 0:
        n_rem, h_rem = _steps(remainder, dt)
        v = evolve(v, 0.0, n_rem, h_rem)
    m = qcore.unvec(v)
    return (m + m.conj().T) / 2


def model_from_terms(hamiltonian: np.ndarray, terms: Sequence[tuple[np.ndarray, float]]) -> LindbladModel:
    return LindbladModel(np.asarray(hamiltonian, dtype=complex), LindbladChannel(tuple(terms)))
