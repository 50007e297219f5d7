"""Experiment harness: config files, seeded Monte Carlo trials, summaries.

Config files are INI documents (see `DEFAULT_CONFIG_TEXT` for the full
schema). Every trial draws a fresh topology and channel realization from
`base_seed + trial`, and all requested methods run on the identical
realization so comparisons are paired. Results are persisted as CSV.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import csv
import io
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import oracle as oracle_mod
from .netmodel import (
    NetworkConfig,
    TaskSelection,
    generate_channels,
    generate_topology,
    validate,
)
from .pipeline import (
    AlgorithmParams,
    InstanceInfeasible,
    SolverFailure,
    run_cb,
    run_mixed_l12,
    run_three_stage,
)

METHODS = ("logsum", "mixed_l12", "cb", "oracle")

WORKERS_ENV_VAR = "GSBF_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkConfig        # gamma is a placeholder; the sweep sets it
    algorithm: AlgorithmParams
    sinr_sweep_db: tuple
    trials: int
    base_seed: int
    methods: tuple
    output_dir: str

    def __post_init__(self):
        if not self.sinr_sweep_db:
            raise ConfigError("sinr_sweep_db must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods: {sorted(unknown)}")
        if "oracle" in self.methods:
            nk = self.network.num_bs * self.network.num_users
            if nk > oracle_mod.MAX_TASKS:
                raise ConfigError(
                    f"oracle requires num_bs*num_users <= {oracle_mod.MAX_TASKS}")


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    sinr_db: float
    method: str
    total_w: float
    transmit_w: float
    compute_w: float
    task_count: int
    iterations: int
    status: str
    wall_ms: float


RECORD_COLUMNS = ("seed", "sinr_db", "method", "total_w", "transmit_w",
                  "compute_w", "task_count", "iterations", "status", "wall_ms")

TRACE_COLUMNS = ("iteration", "omega", "delta_g", "displacement",
                 "residual_bound")

# Defaults mirror the reference experimental setup: 8 two-antenna BSs and
# 15 single-antenna users in a 1 km x 1 km region, unit-normalized channels.
_SCHEMA = {
    "network": {
        "num_bs": ("int", 8),
        "num_users": ("int", 15),
        "antennas": ("int", 2),
        "p_max": ("floatlist", [1.0]),
        "eta": ("floatlist", [0.25]),
        "p_compute": ("float", 0.45),
        "noise_power": ("floatlist", None),  # mode-dependent default
        "region_half_width_km": ("float", 0.5),
        "channel_mode": ("str", "normalized"),
    },
    "algorithm": {
        "p": ("float", 100.0),
        "beta": ("float", 0.1),
        "iter_max": ("int", 25),
        "eps": ("float", 1e-5),
        "zero_tol": ("float", 1e-6),
        "solver_tol": ("float", 1e-8),
    },
    "experiment": {
        "sinr_sweep_db": ("floatlist", [0.0, 4.0, 8.0]),
        "trials": ("int", 20),
        "base_seed": ("int", 0),
        "methods": ("strlist", ["logsum", "mixed_l12", "cb"]),
        "output_dir": ("str", "results"),
    },
}

DEFAULT_CONFIG_TEXT = """\
# gsbf experiment configuration (INI). Unknown keys are rejected; missing
# keys take the defaults shown here. List-valued keys are comma-separated;
# p_max / eta / noise_power accept a scalar (broadcast) or one value per
# BS / user.
[network]
num_bs = 8
num_users = 15
antennas = 2
p_max = 1.0
eta = 0.25
p_compute = 0.45
# noise_power default: 1.0 in normalized mode, 1e-13 W in pathloss mode
region_half_width_km = 0.5
channel_mode = normalized

[algorithm]
p = 100.0
beta = 0.1
iter_max = 25
eps = 1e-5
zero_tol = 1e-6
solver_tol = 1e-8

[experiment]
sinr_sweep_db = 0, 4, 8
trials = 20
base_seed = 0
methods = logsum, mixed_l12, cb
output_dir = results
"""


def _parse_value(kind, raw):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "str":
        return raw.strip()
    items = [s.strip() for s in str(raw).split(",") if s.strip()]
    if kind == "floatlist":
        return [float(s) for s in items]
    if kind == "strlist":
        return items
    raise AssertionError(kind)


def _broadcast(values, length, name):
    if len(values) == 1:
        return np.full(length, values[0])
    if len(values) != length:
        raise ConfigError(f"{name} needs 1 or {length} values, got {len(values)}")
    return np.asarray(values, dtype=float)


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    def line_of(token):
        for i, line in enumerate(text.splitlines(), start=1):
            if token in line:
                return i
        return "?"

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{source}:{line_of('[' + section + ']')}: "
                              f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{source}:{line_of(key)}: unknown key "
                                  f"'{key}' in [{section}]")
            kind, _ = _SCHEMA[section][key]
            try:
                values[(section, key)] = _parse_value(kind, raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{line_of(key)}: bad value for "
                                  f"'{key}': {exc}") from exc

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        return _SCHEMA[section][key][1]

    mode = get("network", "channel_mode")
    noise = get("network", "noise_power")
    if noise is None:
        noise = [1.0 if mode == "normalized" else 1e-13]
    n = get("network", "num_bs")
    k = get("network", "num_users")
    try:
        network = NetworkConfig(
            num_bs=n,
            num_users=k,
            antennas=get("network", "antennas"),
            p_max=_broadcast(get("network", "p_max"), n, "p_max"),
            eta=_broadcast(get("network", "eta"), n, "eta"),
            p_compute=np.full((n, k), get("network", "p_compute")),
            gamma=np.ones(k),
            noise_power=_broadcast(noise, k, "noise_power"),
            region_half_width_km=get("network", "region_half_width_km"),
            channel_mode=mode,
        )
        algorithm = AlgorithmParams(
            p=get("algorithm", "p"),
            beta=get("algorithm", "beta"),
            iter_max=get("algorithm", "iter_max"),
            eps=get("algorithm", "eps"),
            zero_tol=get("algorithm", "zero_tol"),
            solver_tol=get("algorithm", "solver_tol"),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return ExperimentConfig(
        network=network,
        algorithm=algorithm,
        sinr_sweep_db=tuple(get("experiment", "sinr_sweep_db")),
        trials=get("experiment", "trials"),
        base_seed=get("experiment", "base_seed"),
        methods=tuple(get("experiment", "methods")),
        output_dir=get("experiment", "output_dir"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize a config so that parse_config round-trips it."""
    net, alg = cfg.network, cfg.algorithm

    def lst(arr):
        return ", ".join(_fmt(x) for x in np.atleast_1d(arr))

    return "\n".join([
        "[network]",
        f"num_bs = {net.num_bs}",
        f"num_users = {net.num_users}",
        f"antennas = {net.antennas}",
        f"p_max = {lst(net.p_max)}",
        f"eta = {lst(net.eta)}",
        f"p_compute = {_fmt(float(net.p_compute[0, 0]))}",
        f"noise_power = {lst(net.noise_power)}",
        f"region_half_width_km = {_fmt(net.region_half_width_km)}",
        f"channel_mode = {net.channel_mode}",
        "",
        "[algorithm]",
        f"p = {_fmt(alg.p)}",
        f"beta = {_fmt(alg.beta)}",
        f"iter_max = {alg.iter_max}",
        f"eps = {_fmt(alg.eps)}",
        f"zero_tol = {_fmt(alg.zero_tol)}",
        f"solver_tol = {_fmt(alg.solver_tol)}",
        "",
        "[experiment]",
        f"sinr_sweep_db = {lst(np.asarray(cfg.sinr_sweep_db))}",
        f"trials = {cfg.trials}",
        f"base_seed = {cfg.base_seed}",
        f"methods = {', '.join(cfg.methods)}",
        f"output_dir = {cfg.output_dir}",
        "",
    ])


def _fmt(x) -> str:
    """17-significant-digit decimal, round-trips through float()."""
    return format(float(x), ".17g")


_RUNNERS = {
    "logsum": run_three_stage,
    "mixed_l12": run_mixed_l12,
    "cb": lambda ch, cfg, params: run_cb(ch, cfg, params),
}


def _run_method(method, ch, cfg, params):
    """Returns (record fields dict, trace or None)."""
    t0 = time.perf_counter()
    try:
        if method == "oracle":
            res = oracle_mod.oracle_min_power(ch, cfg, params.solver_tol)
            sol, selection = res.best_solution(params.zero_tol), res.selection
            fields = dict(total_w=res.best_total_w, transmit_w=res.best_transmit_w,
                          compute_w=res.best_total_w - res.best_transmit_w,
                          task_count=len(res.best_support), iterations=0)
            trace = None
        else:
            run = _RUNNERS[method](ch, cfg, params)
            sol, selection = run.refined, run.selection
            fields = dict(total_w=run.power.total_w, transmit_w=run.power.transmit_w,
                          compute_w=run.power.compute_w, task_count=run.task_count,
                          iterations=run.iterations)
            trace = run.trace
    except InstanceInfeasible:
        return dict(total_w=np.nan, transmit_w=np.nan, compute_w=np.nan,
                    task_count=0, iterations=0, status="infeasible"), None
    except SolverFailure:
        return dict(total_w=np.nan, transmit_w=np.nan, compute_w=np.nan,
                    task_count=0, iterations=0, status="failed"), None
    report = validate(sol, selection, ch, cfg, zero_tol=params.zero_tol)
    fields["status"] = "ok" if report.ok else "failed"
    fields["wall_ms"] = (time.perf_counter() - t0) * 1e3
    return fields, trace


def _run_trial(cfg: ExperimentConfig, seed: int):
    """All (sinr, method) runs for one seeded channel realization."""
    topo = generate_topology(seed, cfg.network)
    ch = generate_channels(seed, topo, cfg.network)
    records, traces = [], {}
    for db in cfg.sinr_sweep_db:
        net = cfg.network.with_gamma_db(db)
        for method in cfg.methods:
            fields, trace = _run_method(method, ch, net, cfg.algorithm)
            fields.setdefault("wall_ms", 0.0)
            records.append(TrialRecord(seed=seed, sinr_db=db, method=method,
                                       **fields))
            if trace is not None:
                traces[(seed, db, method)] = trace
    return records, traces


def run_trials(cfg: ExperimentConfig, output_dir=None):
    """Run all seeded trials; returns (records, traces).

    With `output_dir`, records and traces are persisted after every trial.
    Worker count comes from the GSBF_WORKERS environment variable
    (default 1); trials are independent and record order is by seed
    regardless of completion order.
    """
    seeds = [cfg.base_seed + j for j in range(cfg.trials)]
    workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    records, traces = [], {}
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_trial, [cfg] * len(seeds), seeds)
            for recs, trs in results:
                records.extend(recs)
                traces.update(trs)
                if output_dir is not None:
                    export(records, traces, output_dir)
    else:
        for seed in seeds:
            recs, trs = _run_trial(cfg, seed)
            records.extend(recs)
            traces.update(trs)
            if output_dir is not None:
                export(records, traces, output_dir)
    return records, traces


def summarize(records):
    """Per (sinr_db, method) mean/stddev over trials with status ok."""
    if not records:
        raise ValueError("no records to summarize")
    keys = sorted({(r.sinr_db, r.method) for r in records})
    rows = []
    for sinr_db, method in keys:
        group = [r for r in records if r.sinr_db == sinr_db and r.method == method
                 and r.status == "ok"]
        n = len(group)
        row = {"sinr_db": sinr_db, "method": method, "trials_ok": n}
        for col in ("total_w", "transmit_w", "task_count"):
            vals = np.array([getattr(r, col) for r in group], dtype=float)
            row[f"{col}_mean"] = float(vals.mean()) if n else np.nan
            row[f"{col}_std"] = float(vals.std(ddof=0)) if n else np.nan
        rows.append(row)
    return rows


def format_summary(rows) -> str:
    header = (f"{'sinr_db':>8} {'method':<10} {'ok':>4} "
              f"{'total_w':>12} {'transmit_w':>12} {'tasks':>8}")
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['sinr_db']:>8.1f} {r['method']:<10} {r['trials_ok']:>4} "
            f"{r['total_w_mean']:>12.4f} {r['transmit_w_mean']:>12.4f} "
            f"{r['task_count_mean']:>8.2f}")
    return "\n".join(lines)


def _trace_filename(seed, sinr_db, method) -> str:
    return f"trace_seed{seed}_sinr{_fmt(sinr_db)}_{method}.csv"


def export(records, traces, out_dir):
    """Write records.csv plus one stage-1 trace CSV per trial.

    UTF-8, LF line endings, '.' decimal separator, 17-significant-digit
    floats (lossless on re-parse).
    """
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "records.csv")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RECORD_COLUMNS)
            for r in records:
                writer.writerow([
                    r.seed, _fmt(r.sinr_db), r.method, _fmt(r.total_w),
                    _fmt(r.transmit_w), _fmt(r.compute_w), r.task_count,
                    r.iterations, r.status, _fmt(r.wall_ms),
                ])
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    for (seed, db, method), trace in traces.items():
        tpath = os.path.join(out_dir, _trace_filename(seed, db, method))
        try:
            with open(tpath, "w", encoding="utf-8", newline="") as fh:
                fh.write(format_trace_csv(trace))
        except OSError as exc:
            raise OSError(f"failed writing {tpath}: {exc}") from exc


def format_trace_csv(trace) -> str:
    """Trace CSV text: one row per iterate (iterations + 1 rows)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    writer.writerow([0, _fmt(trace.omega[0]), _fmt(0.0), _fmt(0.0), _fmt(0.0)])
    for i in range(trace.iterations):
        writer.writerow([i + 1, _fmt(trace.omega[i + 1]), _fmt(trace.delta_g[i]),
                         _fmt(trace.displacement[i]),
                         _fmt(trace.residual_bound[i])])
    return buf.getvalue()


def load_records(path):
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(TrialRecord(
                seed=int(row["seed"]), sinr_db=float(row["sinr_db"]),
                method=row["method"], total_w=float(row["total_w"]),
                transmit_w=float(row["transmit_w"]),
                compute_w=float(row["compute_w"]),
                task_count=int(row["task_count"]),
                iterations=int(row["iterations"]), status=row["status"],
                wall_ms=float(row["wall_ms"])))
    return records
