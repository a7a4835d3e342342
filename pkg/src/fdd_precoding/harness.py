"""Monte-Carlo experiment orchestration, reports, and result serialization.

A sweep runs, for every (setup, trial, T_dl, power, algorithm) combination:
covariance generation, channel draw, training observations, LMMSE estimation,
MMSE-precoder initialization, the selected algorithm, and records the three
sum-rate flavors (true channel, estimated channel, effective-SINR bound) plus
per-user power fractions.  The whole output is a pure function of the spec,
including its root seed; training noise is reused across the power grid so
power curves share common random numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .awamse import AwamseOptions, solve_awamse
from .baselines import mmse_precoder
from .channel import Scenario, build_covariances, build_pilot_matrix, observe_downlink, sample_channel
from .config import CovarianceModel, SystemConfig
from .estimation import EstimationResult, lmmse_estimate
from .metrics import instantaneous_rates, sum_rate_lower_bound
from .rng import substream
from .siwmmse import SiwmmseOptions, solve_iwmmse_naive, solve_siwmmse

ALGORITHMS = (
    "awamse",
    "siwmmse",
    "iwmmse_naive_on_estimate",
    "iwmmse_perfect_csi",
    "mmse_only",
)


class ConfigError(Exception):
    """Raised for malformed experiment configuration files or specs."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one Monte-Carlo experiment.

    ``setups`` redraws the covariance set, ``trials_per_setup`` redraws the
    channels.  The desk-scale default is 20 x 20; the full-paper protocol
    (100 x 100) is available by overriding both.  The covariance model's own
    seed field is ignored: per-setup seeds are derived from ``seed``.
    """

    M: int = 32
    K: int = 8
    T_dl_grid: tuple[int, ...] = (4,)
    powers_db: tuple[float, ...] = (40.0,)
    cov_model: CovarianceModel = field(default_factory=lambda: CovarianceModel.exponential(0.9))
    algorithms: tuple[str, ...] = ("awamse",)
    setups: int = 20
    trials_per_setup: int = 20
    n_samples: int = 100
    seed: int = 0
    max_iters: int = 100
    rel_tol: float = 1e-6
    measure_runtime: bool = False
    degeneracy_threshold: float = 0.05

    def __post_init__(self) -> None:
        if not self.T_dl_grid or not self.powers_db:
            raise ConfigError("T_dl and power grids must be non-empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}; choose from {ALGORITHMS}")
        if self.setups < 1 or self.trials_per_setup < 1:
            raise ConfigError("setups and trials_per_setup must be at least 1")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")

    def power_linear(self, p_db: float) -> float:
        return 10.0 ** (p_db / 10.0)


@dataclass(frozen=True)
class SweepRecord:
    """One result row; the field order here is the CSV column order."""

    setup_id: int
    trial_id: int
    algorithm: str
    M: int
    K: int
    T_dl: int
    P_dl_db: float
    sr_true: float
    sr_est: float
    sr_bound: float
    iterations: int
    runtime_microseconds: float
    per_user_power_fractions: tuple[float, ...]


CSV_COLUMNS = tuple(SweepRecord.__dataclass_fields__)


def _subseed(root: int, *labels: int | str) -> int:
    """Deterministic 63-bit child seed for a labeled purpose."""
    return int(substream(root, *labels).integers(2**63))


def _scenario_for_setup(spec: ExperimentSpec, setup: int) -> Scenario:
    cfg = SystemConfig(spec.M, spec.K, min(spec.T_dl_grid), spec.power_linear(spec.powers_db[0]))
    model = replace(spec.cov_model, seed=_subseed(spec.seed, "covariances", setup))
    return build_covariances(model, cfg)


def _solver_options(spec: ExperimentSpec) -> AwamseOptions:
    return AwamseOptions(max_iters=spec.max_iters, rel_tol=spec.rel_tol, record_trace=False)


def _run_algorithm(
    algorithm: str,
    est: EstimationResult,
    est_perfect: EstimationResult,
    config: SystemConfig,
    spec: ExperimentSpec,
    sample_seed: int,
) -> tuple[np.ndarray, int, float, EstimationResult]:
    """Dispatch one solve; returns (precoder, iterations, runtime_s, est used)."""
    est_used = est_perfect if algorithm == "iwmmse_perfect_csi" else est
    t0 = time.perf_counter()
    init = mmse_precoder(est_used, config)
    init_time = time.perf_counter() - t0
    if algorithm == "mmse_only":
        return init, 0, init_time, est_used
    if algorithm == "awamse":
        report = solve_awamse(est_used, config, init, _solver_options(spec))
    elif algorithm == "siwmmse":
        opts = SiwmmseOptions(
            N=spec.n_samples, max_iters=spec.max_iters, rel_tol=spec.rel_tol, seed=sample_seed
        )
        report = solve_siwmmse(est_used, config, init, opts)
    elif algorithm in ("iwmmse_naive_on_estimate", "iwmmse_perfect_csi"):
        report = solve_iwmmse_naive(est_used.H_hat, config, init, _solver_options(spec))
    else:  # pragma: no cover - spec validation rejects this earlier
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    return report.P_final, report.iterations, report.runtime_s, est_used


def _record(
    spec: ExperimentSpec,
    setup: int,
    trial: int,
    algorithm: str,
    config: SystemConfig,
    p_db: float,
    H: np.ndarray,
    P: np.ndarray,
    est_used: EstimationResult,
    iterations: int,
    runtime_s: float,
) -> SweepRecord:
    fractions = tuple(float(x) for x in np.sum(np.abs(P) ** 2, axis=0) / config.P_dl)
    return SweepRecord(
        setup_id=setup,
        trial_id=trial,
        algorithm=algorithm,
        M=config.M,
        K=config.K,
        T_dl=config.T_dl,
        P_dl_db=p_db,
        sr_true=instantaneous_rates(H, P).sum,
        sr_est=instantaneous_rates(est_used.H_hat, P).sum,
        sr_bound=sum_rate_lower_bound(est_used, P).sum,
        iterations=iterations,
        runtime_microseconds=runtime_s * 1e6 if spec.measure_runtime else 0.0,
        per_user_power_fractions=fractions,
    )


def run_sweep(spec: ExperimentSpec) -> list[SweepRecord]:
    """Run the full Monte-Carlo grid; solver degeneracies become zero-power
    rows rather than aborting the sweep."""
    records: list[SweepRecord] = []
    for setup in range(spec.setups):
        scenario = _scenario_for_setup(spec, setup)
        for trial in range(spec.trials_per_setup):
            H = sample_channel(scenario, _subseed(spec.seed, "channels", setup, trial))
            est_perfect = EstimationResult.perfect(H)
            for T_dl in spec.T_dl_grid:
                obs_seed = _subseed(spec.seed, "training-noise", setup, trial, T_dl)
                for p_idx, p_db in enumerate(spec.powers_db):
                    config = SystemConfig(spec.M, spec.K, T_dl, spec.power_linear(p_db))
                    pilots = build_pilot_matrix(config)
                    obs = observe_downlink(pilots, H, config, obs_seed)
                    est = lmmse_estimate(scenario, pilots, obs, config)
                    for algorithm in spec.algorithms:
                        sample_seed = _subseed(
                            spec.seed, "siwmmse-samples", setup, trial, T_dl, p_idx
                        )
                        P, iters, rt, est_used = _run_algorithm(
                            algorithm, est, est_perfect, config, spec, sample_seed
                        )
                        records.append(
                            _record(spec, setup, trial, algorithm, config, p_db,
                                    H, P, est_used, iters, rt)
                        )
    return records


@dataclass(frozen=True)
class BeforeAfterReport:
    """Mean sum rates before (MMSE initializer) and after optimization."""

    sr_est_before: float
    sr_est_after: float
    sr_true_before: float
    sr_true_after: float


def before_after_report(spec: ExperimentSpec, algorithm: str) -> BeforeAfterReport:
    """Estimated-channel and true-channel sum rates before and after running
    one algorithm, averaged over the spec's instances.

    Requires a single-point grid (one T_dl, one power); use setups = trials = 1
    for the single-instance variant.
    """
    if len(spec.T_dl_grid) != 1 or len(spec.powers_db) != 1:
        raise ConfigError("before/after reports need exactly one T_dl and one power")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    T_dl, p_db = spec.T_dl_grid[0], spec.powers_db[0]
    acc = np.zeros(4)
    count = 0
    for setup in range(spec.setups):
        scenario = _scenario_for_setup(spec, setup)
        for trial in range(spec.trials_per_setup):
            H = sample_channel(scenario, _subseed(spec.seed, "channels", setup, trial))
            config = SystemConfig(spec.M, spec.K, T_dl, spec.power_linear(p_db))
            pilots = build_pilot_matrix(config)
            obs = observe_downlink(
                pilots, H, config, _subseed(spec.seed, "training-noise", setup, trial, T_dl)
            )
            est = lmmse_estimate(scenario, pilots, obs, config)
            est_perfect = EstimationResult.perfect(H)
            est_used = est_perfect if algorithm == "iwmmse_perfect_csi" else est
            init = mmse_precoder(est_used, config)
            sample_seed = _subseed(spec.seed, "siwmmse-samples", setup, trial, T_dl, 0)
            P, _, _, _ = _run_algorithm(algorithm, est, est_perfect, config, spec, sample_seed)
            acc += (
                instantaneous_rates(est_used.H_hat, init).sum,
                instantaneous_rates(est_used.H_hat, P).sum,
                instantaneous_rates(H, init).sum,
                instantaneous_rates(H, P).sum,
            )
            count += 1
    acc /= count
    return BeforeAfterReport(*acc)


def power_allocation_report(
    spec: ExperimentSpec, algorithm: str, P_dl_db: float
) -> np.ndarray:
    """Per-instance per-user power fractions ||p_k||^2 / P_dl at one power.

    Returns an (instances, K) array in (setup, trial) order.
    """
    if len(spec.T_dl_grid) != 1:
        raise ConfigError("power allocation reports need exactly one T_dl")
    one_power = replace(spec, powers_db=(P_dl_db,), algorithms=(algorithm,))
    records = run_sweep(one_power)
    return np.array([r.per_user_power_fractions for r in records])


def high_snr_slope(
    records: list[SweepRecord],
    algorithm: str,
    T_dl: int,
    window: tuple[float, float],
) -> float:
    """Least-squares slope of mean true sum rate versus log2(P_dl) over the
    dB window (bits per power doubling)."""
    lo, hi = min(window), max(window)
    cells: dict[float, list[float]] = {}
    for r in records:
        if r.algorithm == algorithm and r.T_dl == T_dl and lo <= r.P_dl_db <= hi:
            cells.setdefault(r.P_dl_db, []).append(r.sr_true)
    if len(cells) < 2:
        raise ValueError(
            f"need at least two powers in window [{lo}, {hi}] for {algorithm}, T_dl={T_dl}"
        )
    dbs = np.array(sorted(cells))
    means = np.array([np.mean(cells[db]) for db in dbs])
    x = np.log2(10.0 ** (dbs / 10.0))
    return float(np.polyfit(x, means, 1)[0])


def runtime_benchmark(spec: ExperimentSpec) -> dict[str, float]:
    """Mean wall-clock solve time (microseconds) per algorithm on identical
    instances."""
    records = run_sweep(replace(spec, measure_runtime=True))
    out: dict[str, float] = {}
    for algorithm in spec.algorithms:
        times = [r.runtime_microseconds for r in records if r.algorithm == algorithm]
        out[algorithm] = float(np.mean(times))
    return out


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _record_to_row(r: SweepRecord) -> str:
    fractions = ";".join(_fmt(f) for f in r.per_user_power_fractions)
    cells = [
        str(r.setup_id), str(r.trial_id), r.algorithm, str(r.M), str(r.K), str(r.T_dl),
        _fmt(r.P_dl_db), _fmt(r.sr_true), _fmt(r.sr_est), _fmt(r.sr_bound),
        str(r.iterations), _fmt(r.runtime_microseconds), fractions,
    ]
    return ",".join(cells)


def write_results(records: list[SweepRecord], path: str) -> None:
    """Write records as CSV with the SweepRecord column order."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for r in records:
                fh.write(_record_to_row(r) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def read_results(path: str) -> list[SweepRecord]:
    """Parse a CSV produced by write_results."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise OSError(f"cannot read results from {path!r}: {exc}") from exc
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ConfigError(f"{path!r} is not a sweep results file")
    records = []
    for ln in lines[1:]:
        c = ln.split(",")
        fractions = tuple(float(x) for x in c[12].split(";")) if c[12] else ()
        records.append(
            SweepRecord(
                setup_id=int(c[0]), trial_id=int(c[1]), algorithm=c[2],
                M=int(c[3]), K=int(c[4]), T_dl=int(c[5]), P_dl_db=float(c[6]),
                sr_true=float(c[7]), sr_est=float(c[8]), sr_bound=float(c[9]),
                iterations=int(c[10]), runtime_microseconds=float(c[11]),
                per_user_power_fractions=fractions,
            )
        )
    return records


def emit_plot_data(records: list[SweepRecord], path: str) -> None:
    """Plot-ready series: per (algorithm, T_dl) block, rows of
    ``P_dl_db mean stderr`` of the true sum rate, blocks blank-line separated."""
    series: dict[tuple[str, int], dict[float, list[float]]] = {}
    for r in records:
        series.setdefault((r.algorithm, r.T_dl), {}).setdefault(r.P_dl_db, []).append(r.sr_true)
    blocks = []
    for (algorithm, T_dl) in sorted(series):
        cells = series[(algorithm, T_dl)]
        rows = [f"# algorithm={algorithm} T_dl={T_dl}"]
        for db in sorted(cells):
            vals = np.asarray(cells[db])
            stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows.append(f"{_fmt(db)} {_fmt(float(vals.mean()))} {_fmt(stderr)}")
        blocks.append("\n".join(rows))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n\n".join(blocks) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# config files

_LIST_KEYS = {"t_dl", "powers_db", "algorithms"}
_KEYS = {
    "m", "k", "t_dl", "powers_db", "cov_model", "rho", "sigma2", "rank", "loading",
    "algorithms", "setups", "trials", "n_samples", "seed", "max_iters", "rel_tol",
    "measure_runtime", "degeneracy_threshold",
}


def parse_config(text: str) -> ExperimentSpec:
    """Parse ``key = value`` experiment configs; unknown keys are errors.

    Lists are comma-separated.  See the README for the full key table.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    def geti(key: str, default: int) -> int:
        try:
            return int(raw[key]) if key in raw else default
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected integer, got {raw[key]!r}") from exc

    def getf(key: str, default: float) -> float:
        try:
            return float(raw[key]) if key in raw else default
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected number, got {raw[key]!r}") from exc

    def getlist(key: str, conv, default):
        if key not in raw:
            return default
        try:
            return tuple(conv(part.strip()) for part in raw[key].split(",") if part.strip())
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: malformed list {raw[key]!r}") from exc

    kind = raw.get("cov_model", "exponential")
    if kind not in ("exponential", "scaled_identity", "random_psd"):
        raise ConfigError(f"unknown cov_model {kind!r}")
    model = CovarianceModel(
        kind=kind,
        rho=getf("rho", 0.9),
        sigma2=getf("sigma2", 1.0),
        rank=geti("rank", 1),
        loading=getf("loading", 0.01),
    )
    measure = raw.get("measure_runtime", "false").strip().lower()
    if measure not in ("true", "false"):
        raise ConfigError(f"key 'measure_runtime': expected true/false, got {measure!r}")

    try:
        return ExperimentSpec(
            M=geti("m", 32),
            K=geti("k", 8),
            T_dl_grid=getlist("t_dl", int, (4,)),
            powers_db=getlist("powers_db", float, (40.0,)),
            cov_model=model,
            algorithms=getlist("algorithms", str, ("awamse",)),
            setups=geti("setups", 20),
            trials_per_setup=geti("trials", 20),
            n_samples=geti("n_samples", 100),
            seed=geti("seed", 0),
            max_iters=geti("max_iters", 100),
            rel_tol=getf("rel_tol", 1e-6),
            measure_runtime=measure == "true",
            degeneracy_threshold=getf("degeneracy_threshold", 0.05),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_spec(path: str) -> ExperimentSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
