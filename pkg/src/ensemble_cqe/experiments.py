"""End-to-end experiment drivers behind the ``cqe`` command.

A run is described by one JSON document::

    {
      "experiment": "random-model" | "h2-curve" | "h4-curve" | "generic",
      "n_qubits": 2,                  # random-model
      "distances": [0.7, 1.0],        # curves, Angstrom
      "fcidump": "h2.fcidump",        # generic
      "n_states": 4,                  # generic (optional)
      "weights": [9, 9, 1, 1],        # raw, normalized internally (optional)
      "algorithm": "parallel" | "weighted-random",
      "seed": 0,
      "solver": {"eta": 0.3, "delta": 1e-8, "mode": "exact", ...},
      "output_path": "results"
    }

Outputs are a ``result.json`` bundle plus flat CSV files; wall-clock
timings go to a separate ``timing.json`` so the other files are
bitwise reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .acse import PauliPool, TwoBodyPool
from .exceptions import CapacityError, ConfigError, CQEError
from .fcidump import read_fcidump
from .fermion import compress_to_sector, sector_basis
from .hilbert import QubitRegister, WeightVector, basis_state
from .integrals import IntegralSet, build_hamiltonian, hydrogen_chain_integrals
from .pauli import random_hamiltonian
from .solvers import (
    SolverConfig,
    Trajectory,
    exact_diagonalize,
    initial_guesses,
    parallel_cqe,
    warm_start,
    weighted_random_cqe,
)

EXPERIMENTS = ("random-model", "h2-curve", "h4-curve", "generic")
ALGORITHMS = ("parallel", "weighted-random")
DISTANCE_RANGE = {"h2-curve": (0.3, 6.0), "h4-curve": (0.5, 4.0)}
MAX_RANDOM_QUBITS = 5
SCHEMA = "ensemble-cqe-result/1"


@dataclass
class ExperimentConfig:
    experiment: str
    distances: list[float] = field(default_factory=list)
    n_qubits: int | None = None
    fcidump: str | None = None
    n_states: int | None = None
    weights: list[float] | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    algorithm: str = "parallel"
    seed: int = 0
    output_path: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if any(not d > 0 for d in self.distances):
            raise ConfigError("distances must be strictly positive")
        if self.experiment in DISTANCE_RANGE:
            if not self.distances:
                raise ConfigError(f"{self.experiment} needs at least one distance")
            lo, hi = DISTANCE_RANGE[self.experiment]
            bad = [d for d in self.distances if not lo <= d <= hi]
            if bad:
                raise ConfigError(f"distances {bad} outside [{lo}, {hi}] Angstrom")
        if self.experiment == "random-model":
            if self.n_qubits is None or self.n_qubits < 1:
                raise ConfigError("random-model needs n_qubits >= 1")
            if self.n_qubits > MAX_RANDOM_QUBITS:
                raise CapacityError(f"random-model capped at {MAX_RANDOM_QUBITS} qubits")
        if self.experiment == "generic" and not self.fcidump:
            raise ConfigError("generic experiment needs an 'fcidump' path")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.size == 0 or np.any(w < 0) or not w.sum() > 0:
                raise ConfigError("weights must be non-negative and not all zero")
            if np.any(np.diff(w) > 0):
                raise ConfigError("weights must be non-increasing")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config lacks 'experiment'")
        solver = data.pop("solver", {}) or {}
        try:
            data["solver"] = SolverConfig(**solver)
        except TypeError as exc:
            raise ConfigError(f"bad solver section: {exc}") from None
        except CQEError as exc:
            raise ConfigError(f"bad solver section: {exc}") from None
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["solver"] = asdict(self.solver)
        return out

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(data)


@dataclass
class PointResult:
    label: str
    distance: float | None
    exact_eigenvalues: list[float]
    energies: list[float]
    deltas: list[float]
    max_abs_delta: float
    ensemble_energy: float
    target_ensemble_energy: float
    iterations: int
    converged: bool
    seed: int
    config_hash: str
    error: str | None = None
    trajectory: Trajectory | None = None


@dataclass
class ResultBundle:
    config: ExperimentConfig
    points: list[PointResult]
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return all(p.converged and p.error is None for p in self.points)

    def summary(self) -> dict:
        return {
            "schema": SCHEMA,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "converged": self.converged,
            "points": [{f.name: getattr(p, f.name) for f in fields(p) if f.name != "trajectory"}
                       for p in self.points],
        }


# -- helpers -------------------------------------------------------------------

def _weights(config: ExperimentConfig, default) -> WeightVector:
    return WeightVector.from_raw(config.weights if config.weights is not None else default)


def _solve(config: ExperimentConfig, h, states, w, pool, oracle) -> Trajectory:
    # the experiment seed drives both the model and the shot noise
    solver = replace(config.solver, seed=config.seed)
    algorithm = parallel_cqe if config.algorithm == "parallel" else weighted_random_cqe
    return algorithm(h, states, w, solver, pool=pool, oracle=oracle)


def _point(config, label, distance, evals, traj: Trajectory, w: WeightVector) -> PointResult:
    last = traj.records[-1]
    energies = [float(e) for e in last.per_state_energies]
    k = len(energies)
    exact = [float(e) for e in evals[:k]]
    deltas = [e - x for e, x in zip(energies, exact)]
    return PointResult(
        label=label, distance=distance, exact_eigenvalues=exact, energies=energies,
        deltas=deltas, max_abs_delta=float(max(abs(d) for d in deltas)),
        ensemble_energy=float(last.ensemble_energy),
        target_ensemble_energy=float(np.dot(w.weights, exact)),
        iterations=traj.iterations, converged=traj.converged, seed=config.seed,
        config_hash=config.config_hash(), trajectory=traj,
    )


def _failed_point(config, label, distance, exc: Exception) -> PointResult:
    return PointResult(label, distance, [], [], [], math.nan, math.nan, math.nan, 0, False,
                       config.seed, config.config_hash(), error=f"{type(exc).__name__}: {exc}")


def sector_problem(ints: IntegralSet, n_electrons: int, ms2: int = 0):
    """Second-quantized Hamiltonian, its (N, S_z) basis and the sector oracle."""
    h = build_hamiltonian(ints)
    basis = sector_basis(2 * ints.n_spatial, n_electrons, ms2 / 2)
    comp = compress_to_sector(h, basis)
    evals, evecs = exact_diagonalize(comp.block())
    return h, basis, comp, evals, evecs


def _compressed_run(config, label, distance, ints, n_electrons, ms2, k_default, w_default):
    """Sector-compressed pipeline with the complete Pauli pool (H2 and small generic cases)."""
    _, _, comp, evals, evecs = sector_problem(ints, n_electrons, ms2)
    k = config.n_states or k_default
    w = _weights(config, w_default if len(w_default) == k else np.arange(k, 0, -1))
    if len(w) != k:
        raise ConfigError(f"{len(w)} weights for {k} states")
    padded = np.zeros((comp.matrix.shape[0], evecs.shape[1]), dtype=complex)
    padded[: comp.dim] = evecs
    states = initial_guesses(comp.matrix, k)
    traj = _solve(config, comp.matrix, states, w, PauliPool(comp.n_qubits), (evals, padded))
    return _point(config, label, distance, evals, traj, w)


# -- experiments ---------------------------------------------------------------

def run_random_model(config: ExperimentConfig) -> ResultBundle:
    m = config.n_qubits
    k = 1 << m
    h = random_hamiltonian(m, config.seed)
    evals, evecs = exact_diagonalize(h)
    w = _weights(config, np.arange(k, 0, -1))
    if len(w) != k:
        raise ConfigError(f"random-model with {m} qubits needs {k} weights")
    states = [basis_state(QubitRegister(m), i) for i in range(k)]
    traj = _solve(config, h, states, w, PauliPool(m), (evals, evecs))
    return ResultBundle(config, [_point(config, f"M={m}", None, evals, traj, w)])


def run_h2_curve(config: ExperimentConfig) -> ResultBundle:
    points = []
    for d in config.distances:
        try:
            ints, _ = hydrogen_chain_integrals(2, d)
            points.append(_compressed_run(config, f"{d:.4f}", d, ints, 2, 0, 4, [9, 9, 1, 1]))
        except CQEError as exc:
            points.append(_failed_point(config, f"{d:.4f}", d, exc))
    return ResultBundle(config, points)


def run_h4_curve(config: ExperimentConfig) -> ResultBundle:
    """Sweep from the largest distance down, warm-starting each point from the last."""
    k = 8
    w = _weights(config, np.arange(k, 0, -1))
    if len(w) != k:
        raise ConfigError("h4-curve needs 8 weights")
    pool = TwoBodyPool(8)
    by_distance = {}
    previous = None
    for d in sorted(config.distances, reverse=True):
        try:
            ints, _ = hydrogen_chain_integrals(4, d)
            h, basis, comp, evals, evecs = sector_problem(ints, 4, 0)
            full_vecs = np.array([comp.embed(v) for v in evecs.T]).T
            states = initial_guesses(h, k, basis) if previous is None else warm_start(previous)
            traj = _solve(config, h, states, w, pool, (evals, full_vecs))
            previous = traj.states
            by_distance[d] = _point(config, f"{d:.4f}", d, evals, traj, w)
        except CQEError as exc:
            by_distance[d] = _failed_point(config, f"{d:.4f}", d, exc)
            previous = None
    return ResultBundle(config, [by_distance[d] for d in config.distances])


def run_generic(config: ExperimentConfig) -> ResultBundle:
    """Any FCIDUMP: compressed sector when its size is a power of two, Fock space otherwise."""
    ints = read_fcidump(config.fcidump)
    n_el = ints.n_electrons
    h, basis, comp, evals, evecs = sector_problem(ints, n_el, ints.ms2)
    k = config.n_states or min(4, basis.dim)
    if not 1 <= k <= basis.dim:
        raise ConfigError(f"n_states={k} but the sector has {basis.dim} determinants")
    label = Path(config.fcidump).name
    if basis.dim >= 2 and basis.dim == 1 << comp.n_qubits:
        point = _compressed_run(config, label, None, ints, n_el, ints.ms2, k,
                                list(np.arange(k, 0, -1)))
        return ResultBundle(config, [point])
    w = _weights(config, np.arange(k, 0, -1))
    if len(w) != k:
        raise ConfigError(f"{len(w)} weights for {k} states")
    full_vecs = np.array([comp.embed(v) for v in evecs.T]).T
    states = initial_guesses(h, k, basis)
    traj = _solve(config, h, states, w, TwoBodyPool(2 * ints.n_spatial), (evals, full_vecs))
    return ResultBundle(config, [_point(config, label, None, evals, traj, w)])


RUNNERS = {
    "random-model": run_random_model,
    "h2-curve": run_h2_curve,
    "h4-curve": run_h4_curve,
    "generic": run_generic,
}


def run_experiment(config: ExperimentConfig) -> ResultBundle:
    start = time.perf_counter()
    bundle = RUNNERS[config.experiment](config)
    bundle.timing["total_seconds"] = time.perf_counter() - start
    return bundle


def oracle(config: ExperimentConfig) -> dict:
    """Exact eigenvalues only, no optimization."""
    out = {"schema": SCHEMA, "config_hash": config.config_hash(), "points": []}
    if config.experiment == "random-model":
        evals, _ = exact_diagonalize(random_hamiltonian(config.n_qubits, config.seed))
        out["points"].append({"label": f"M={config.n_qubits}", "eigenvalues": evals.tolist()})
        return out
    if config.experiment == "generic":
        ints = read_fcidump(config.fcidump)
        evals = sector_problem(ints, ints.n_electrons, ints.ms2)[3]
        out["points"].append({"label": Path(config.fcidump).name, "eigenvalues": evals.tolist()})
        return out
    n_atoms = 2 if config.experiment == "h2-curve" else 4
    for d in config.distances:
        ints, mos = hydrogen_chain_integrals(n_atoms, d)
        evals = sector_problem(ints, n_atoms, 0)[3]
        out["points"].append({"label": f"{d:.4f}", "distance": d, "scf_energy": mos.scf_energy,
                              "eigenvalues": evals.tolist()})
    return out


# -- output --------------------------------------------------------------------

def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_csv(bundle: ResultBundle) -> str:
    """One row per (point, iteration): energies, residual, step and overlaps."""
    rows = []
    k = max((len(p.energies) for p in bundle.points), default=0)
    header = ["point", "iteration", "ensemble_energy", "residual_frobenius_sq", "theta_star",
              "orthonormality_error"]
    header += [f"energy_{i}" for i in range(k)] + [f"overlap_{i}" for i in range(k)]
    for p in bundle.points:
        if p.trajectory is None:
            continue
        for r in p.trajectory.records:
            ov = r.target_overlaps if r.target_overlaps is not None else [math.nan] * k
            rows.append([p.label, r.iteration, _fmt(r.ensemble_energy),
                         _fmt(r.residual_frobenius_sq), _fmt(r.theta_star),
                         _fmt(r.orthonormality_error)]
                        + [_fmt(e) for e in r.per_state_energies] + [_fmt(o) for o in ov])
    return _csv(rows, header)


def curve_csv(bundle: ResultBundle) -> str:
    k = max((len(p.energies) for p in bundle.points), default=0)
    header = ["point", "distance"] + [f"exact_{i}" for i in range(k)] \
        + [f"computed_{i}" for i in range(k)] + ["max_abs_delta", "iterations", "converged"]
    rows = []
    for p in bundle.points:
        exact = p.exact_eigenvalues + [math.nan] * (k - len(p.exact_eigenvalues))
        comp = p.energies + [math.nan] * (k - len(p.energies))
        rows.append([p.label, "" if p.distance is None else _fmt(p.distance)]
                    + [_fmt(x) for x in exact] + [_fmt(x) for x in comp]
                    + [_fmt(p.max_abs_delta), p.iterations, int(p.converged)])
    return _csv(rows, header)


def write_bundle(bundle: ResultBundle, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(json.dumps(bundle.summary(), indent=2, sort_keys=True) + "\n")
    (out / "trace.csv").write_text(trace_csv(bundle))
    (out / "curve.csv").write_text(curve_csv(bundle))
    (out / "timing.json").write_text(json.dumps(bundle.timing, indent=2) + "\n")
    return out
