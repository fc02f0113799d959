"""Random-Hamiltonian ensembles, parameter sweeps and end-to-end checks."""
from __future__ import annotations

import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dynamics, entanglement, models, qcore
from .errors import SolverError, ValidationError

DEFAULT_GRID = tuple(float(x) for x in np.logspace(math.log10(0.05), math.log10(50.0), 20))
THRESHOLDS = (0.35, 0.5)


class Quantity(str, enum.Enum):
    CONCURRENCE = "concurrence"
    FID_PHI_PLUS = "fid_phi_plus"
    FID_PHI_MINUS = "fid_phi_minus"
    FID_PSI_PLUS = "fid_psi_plus"
    FID_PSI_MINUS = "fid_psi_minus"


_BELL_OF = {
    Quantity.FID_PHI_PLUS: "phi+",
    Quantity.FID_PHI_MINUS: "phi-",
    Quantity.FID_PSI_PLUS: "psi+",
    Quantity.FID_PSI_MINUS: "psi-",
}


def substream(seed: int, grid_index: int, sample_index: int) -> np.random.Generator:
    """Independent generator for one sample: Philox keyed by the master seed,
    counter (0, 0, grid_index, sample_index)."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, grid_index, sample_index]))


@dataclass(frozen=True)
class EnsembleConfig:
    samples: int = 2000
    j_over_gamma_grid: tuple[float, ...] = DEFAULT_GRID
    seed: int = 0
    n_qubits: int = 2
    bins: int = 20
    quantity: Quantity = Quantity.CONCURRENCE
    gamma: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "quantity", Quantity(self.quantity))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        object.__setattr__(self, "j_over_gamma_grid", tuple(float(x) for x in self.j_over_gamma_grid))
        if self.samples < 1:
            raise ValidationError("samples must be at least 1")
        if not self.j_over_gamma_grid or any(x <= 0 for x in self.j_over_gamma_grid):
            raise ValidationError("grid values must be positive and the grid nonempty")
        if self.bins < 2:
            raise ValidationError("bins must be at least 2")
        if self.n_qubits != 2:
            raise ValidationError("ensembles of two-qubit measures need n_qubits = 2")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")

    @classmethod
    def from_json(cls, obj: dict) -> "EnsembleConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValidationError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(str(exc)) from exc


def sample_measures(seed: int, grid_index: int, sample_index: int, j_over_gamma: float,
                    gamma: float = 1.0) -> dict[str, float]:
    """Steady-state concurrence and Bell fidelities for one random Hamiltonian."""
    rng = substream(seed, grid_index, sample_index)
    h = models.gue_sample(4, j_over_gamma * gamma, rng)
    rho = dynamics.steady_state(
        dynamics.LindbladModel(h, dynamics.spontaneous_decay_channel(2, gamma))
    )
    out = {Quantity.CONCURRENCE.value: entanglement.concurrence2(rho)}
    for q, label in _BELL_OF.items():
        out[q.value] = entanglement.bell_fidelity(rho, label)
    return out


@dataclass(frozen=True)
class GridSummary:
    j_over_gamma: float
    count: int
    failures: int
    minimum: float
    maximum: float
    mean: float
    above: dict[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class HistogramTable:
    rows: tuple[tuple[float, float, float, int, float], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("j_over_gamma,bin_lower,bin_upper,count,density\n")
        for j, lo, hi, c, d in self.rows:
            buf.write(f"{j:.17g},{lo:.17g},{hi:.17g},{c},{d:.17g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class EnsembleResult:
    config: EnsembleConfig
    histogram: HistogramTable
    summary: tuple[GridSummary, ...]

    @property
    def failures(self) -> int:
        return sum(s.failures for s in self.summary)

    def summary_csv(self) -> str:
        buf = io.StringIO()
        cols = ["j_over_gamma", "count", "failures", "min", "max", "mean"]
        cols += [f"frac_above_{t:g}" for t in THRESHOLDS]
        buf.write(",".join(cols) + "\n")
        for s in self.summary:
            vals = [f"{s.j_over_gamma:.17g}", str(s.count), str(s.failures),
                    f"{s.minimum:.17g}", f"{s.maximum:.17g}", f"{s.mean:.17g}"]
            vals += [f"{s.above[t]:.17g}" for t in THRESHOLDS]
            buf.write(",".join(vals) + "\n")
        return buf.getvalue()


def _grid_point(args) -> tuple[list[float], int]:
    cfg, g = args
    j = cfg.j_over_gamma_grid[g]
    values, failures = [], 0
    for i in range(cfg.samples):
        try:
            values.append(sample_measures(cfg.seed, g, i, j, cfg.gamma)[cfg.quantity.value])
        except SolverError:
            failures += 1
    return values, failures


def run_ensemble(cfg: EnsembleConfig, workers: int | None = None) -> EnsembleResult:
    """Histogram one steady-state measure over GUE Hamiltonians at each J/gamma.

    Output depends only on the config: every sample has its own substream and
    aggregates are computed from sorted values, so neither worker count nor
    sample order changes a single byte.
    """
    tasks = [(cfg, g) for g in range(len(cfg.j_over_gamma_grid))]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_grid_point, tasks))
    else:
        results = [_grid_point(t) for t in tasks]

    edges = np.linspace(0.0, 1.0, cfg.bins + 1)
    width = 1.0 / cfg.bins
    rows, summary = [], []
    for j, (values, failures) in zip(cfg.j_over_gamma_grid, results):
        vals = np.sort(np.clip(np.asarray(values, dtype=float), 0.0, 1.0))
        counts, _ = np.histogram(vals, bins=edges)
        n = int(vals.size)
        for k, c in enumerate(counts):
            density = c / (n * width) if n else 0.0
            rows.append((j, float(edges[k]), float(edges[k + 1]), int(c), float(density)))
        summary.append(GridSummary(
            j_over_gamma=j,
            count=n,
            failures=failures,
            minimum=float(vals[0]) if n else math.nan,
            maximum=float(vals[-1]) if n else math.nan,
            mean=math.fsum(vals) / n if n else math.nan,
            above={t: float(np.sum(vals > t)) / n if n else math.nan for t in THRESHOLDS},
        ))
    return EnsembleResult(cfg, HistogramTable(tuple(rows)), tuple(summary))


# ---- Ising curves ----------------------------------------------------------------

ISING_COLUMNS = ("j_over_gamma", "concurrence", "f_phi_plus", "f_phi_minus", "f_psi_plus", "f_psi_minus")


def ising_curve(delta_over_j: float, j_over_gamma_grid: Sequence[float], gamma: float = 1.0) -> list[tuple[float, ...]]:
    """Closed-form Ising measures along a J/gamma grid at fixed delta/J."""
    if len(j_over_gamma_grid) == 0:
        raise ValidationError("grid must be nonempty")
    rows = []
    for jg in j_over_gamma_grid:
        j = jg * gamma
        x = models.ising_x(models.IsingParams(delta_over_j * j, j, gamma))
        f = models.ising_fidelities(x)
        rows.append((float(jg), models.ising_concurrence(abs(x)), f["phi+"], f["phi-"], f["psi+"], f["psi-"]))
    return rows


def rows_to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in r) + "\n")
    return buf.getvalue()


# ---- optimal Hamiltonians ----------------------------------------------------------


@dataclass(frozen=True)
class OptimalReport:
    concurrence: float
    f_psi: float
    trace_distance_to_rho_star: float
    state: np.ndarray = field(repr=False)


def verify_optimal(delta_to_f_ratio: float, f_to_gamma_ratio: float, sign: int = +1,
                   gamma: float = 1.0) -> OptimalReport:
    """Steady state of the two-qubit optimal Hamiltonian at j = -delta."""
    if delta_to_f_ratio < 1 or f_to_gamma_ratio < 1:
        raise ValidationError("ratios must be at least 1")
    f = f_to_gamma_ratio * gamma
    delta = delta_to_f_ratio * f
    h = models.optimal_h2(delta, f, -delta, sign)
    rho = dynamics.steady_state(dynamics.LindbladModel(h, dynamics.spontaneous_decay_channel(2, gamma)))
    return OptimalReport(
        concurrence=entanglement.concurrence2(rho),
        f_psi=entanglement.bell_fidelity(rho, "psi+" if sign > 0 else "psi-"),
        trace_distance_to_rho_star=qcore.trace_distance(rho, models.rho_star(sign)),
        state=rho,
    )


@dataclass(frozen=True)
class NQubitReport:
    n: int
    fidelity_to_target: float
    trace_distance_to_target: float
    pure_W_concurrence: float
    mixed_concurrence_bound: float | None
    crossing_j: float
    crossing_gap: float
    state: np.ndarray = field(repr=False)


def crossing_location(n: int, delta: float, f: float, points: int = 41) -> tuple[float, float]:
    """Avoided crossing of the two lowest levels of the N-qubit Hamiltonian near j = delta/(1-N)."""
    center = delta / (1 - n)
    js = np.linspace(center - 0.3 * abs(center), center + 0.3 * abs(center), points)
    factory = lambda j: models.optimal_hN(n, delta, f, j)  # noqa: E731
    return models.find_avoided_crossing(models.spectrum_sweep(factory, js), (0, 1))


def nqubit_pipeline(n: int, delta_to_f_ratio: float, f_to_gamma_ratio: float,
                    gamma: float = 1.0, budget: int | None = 4, seed: int = 0) -> NQubitReport:
    """Steady state of the N-qubit Hamiltonian at delta = J(1 - N) against the W mixture.

    ``budget=None`` skips the convex-roof bound on the target mixture.
    """
    if not 2 <= n <= 4:
        raise ValidationError("n must be in 2..4 for the dense solver")
    if delta_to_f_ratio < 1 or f_to_gamma_ratio < 1:
        raise ValidationError("ratios must be at least 1")
    f = f_to_gamma_ratio * gamma
    delta = delta_to_f_ratio * f
    j = delta / (1 - n)
    h = models.optimal_hN(n, delta, f, j)
    rho = dynamics.steady_state(dynamics.LindbladModel(h, dynamics.spontaneous_decay_channel(n, gamma)))
    target = models.target_mixture_N(n)
    bound = None
    if budget is not None:
        bound = entanglement.multipartite_concurrence_mixed(target, budget=budget, seed=seed)
    j_star, gap = crossing_location(n, delta, f)
    return NQubitReport(
        n=n,
        fidelity_to_target=qcore.state_fidelity(rho, target),
        trace_distance_to_target=qcore.trace_distance(rho, target),
        pure_W_concurrence=entanglement.multipartite_concurrence_pure(models.w_state(n)),
        mixed_concurrence_bound=bound,
        crossing_j=j_star,
        crossing_gap=gap,
        state=rho,
    )


# ---- driven lab-frame model ----------------------------------------------------------


@dataclass(frozen=True)
class RotatingFrameReport:
    fidelity: float
    trace_distance: float
    rotating_state: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)


def rotating_frame_check(
    omega0_over_delta: float = 100.0,
    delta_to_f_ratio: float = 10.0,
    f_to_gamma_ratio: float = 10.0,
    t_gamma: float = 20.0,
    gamma: float = 1.0,
    steps_per_period: int = 512,
) -> RotatingFrameReport:
    """Integrate the driven Ising pair in the lab frame and compare with the
    steady state of the effective time-independent Hamiltonian.

    Lab Hamiltonian: sum_k (omega0/2 Z_k + F cos(omega t) X_k) + J X x X with
    omega = omega0 - delta and J = -delta. The state at time t is moved to the
    frame rotating at omega before comparison.
    """
    f = f_to_gamma_ratio * gamma
    delta = delta_to_f_ratio * f
    j = -delta
    omega0 = omega0_over_delta * abs(delta)
    omega = omega0 - delta
    sz = np.kron(qcore.pauli(3), np.eye(2)) + np.kron(np.eye(2), qcore.pauli(3))
    sx = np.kron(qcore.pauli(1), np.eye(2)) + np.kron(np.eye(2), qcore.pauli(1))
    xx = np.kron(qcore.pauli(1), qcore.pauli(1))
    static = omega0 / 2 * sz + j * xx

    def h_lab(t: float) -> np.ndarray:
        return static + f * math.cos(omega * t) * sx

    channel = dynamics.spontaneous_decay_channel(2, gamma)
    period = 2 * math.pi / omega
    t = t_gamma / gamma
    rho0 = qcore.projector(qcore.basis_state("00"))
    rho_t = dynamics.propagate_time_dependent(h_lab, channel, rho0, t, period / steps_per_period, period=period)
    # frame rotating with the drive: U = exp(-i omega t S_z), S_z = sz/2 (diagonal)
    phases = np.exp(1j * omega * t * np.diag(sz).real / 2)
    rho_rf = phases[:, None] * rho_t * phases.conj()[None, :]
    target = dynamics.steady_state(
        dynamics.LindbladModel(models.optimal_h2(delta, f, j, +1), channel)
    )
    return RotatingFrameReport(
        fidelity=qcore.state_fidelity(rho_rf, target),
        trace_distance=qcore.trace_distance(rho_rf, target),
        rotating_state=rho_rf,
        target=target,
    )
