"""Monte Carlo source-localization experiments.

Each trial draws one snapshot matrix from its own random stream, seeded by
``(master_seed, trial_index)``, and every requested method estimates the
support from that same matrix.  Results therefore do not depend on how
trials are scheduled across threads.
"""

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .doa import (NoiseModel, Scenario, SteeringGrid, exact_recovery, music_estimate,
                  steering_matrix, simulate_snapshots)
from .solver import NumericalError, SolverConfig, hub_sniht, sniht

METHODS = ("SNIHT", "HUB-SNIHT", "MUSIC")
_METHOD_ALIASES = {"sniht": "SNIHT", "hub-sniht": "HUB-SNIHT", "hub_sniht": "HUB-SNIHT",
                   "hub": "HUB-SNIHT", "music": "MUSIC"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    true_doas: list
    snr_db: float
    q: int
    trials: int = 1000
    n: int = 20
    grid_min: float = -90.0
    grid_step: float = 2.0
    grid_max: float = 90.0
    noise_kind: str = "igcg"
    noise_lambda: float = 0.1
    noise_variance: float = 1.0
    methods: list = field(default_factory=lambda: list(METHODS))
    master_seed: int = 0
    q_quantile: float = 0.8
    max_iter: int = 500
    rel_tol: float = 1e-6

    def grid(self):
        return SteeringGrid.uniform(self.n, self.grid_min, self.grid_step, self.grid_max)

    def scenario(self):
        grid = self.grid()
        idx = [grid.index_of(t) for t in self.true_doas]
        noise = NoiseModel(self.noise_kind,
                           self.noise_lambda if self.noise_kind == "igcg" else None,
                           self.noise_variance)
        return Scenario(grid, idx, self.q, self.snr_db, noise)

    def solver_config(self):
        return SolverConfig(K=len(self.true_doas), q_quantile=self.q_quantile,
                            max_iter=self.max_iter, rel_tol=self.rel_tol,
                            init_support_mode="peaks")


@dataclass
class ExperimentResult:
    per_method: dict
    histogram: dict
    angles: list
    trial_count: int
    warnings: dict
    config: dict
    wall_time: float = 0.0


def _number(obj, key, kind=float, required=False, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required field '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field '{key}' must be a number")
    if kind is int:
        if float(val) != int(val):
            raise ConfigError(f"field '{key}' must be an integer")
        return int(val)
    return float(val)


def parse_config(text):
    """Parse and validate a JSON experiment description.

    Required: ``true_doas`` (degrees), ``snr_db``, ``q`` (snapshots).
    Optional: ``trials``, ``n``, ``grid`` ``{min, step, max}``, ``noise``
    ``{kind, lambda, variance}``, ``methods``, ``master_seed`` and ``solver``
    ``{q_quantile, max_iter, rel_tol}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno} "
                          f"(char {exc.pos}): {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")

    doas = doc.get("true_doas")
    if not isinstance(doas, list) or not doas or not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in doas):
        raise ConfigError("field 'true_doas' must be a nonempty list of angles")
    cfg = ExperimentConfig(
        true_doas=[float(t) for t in doas],
        snr_db=_number(doc, "snr_db", required=True),
        q=_number(doc, "q", int, required=True),
        trials=_number(doc, "trials", int, default=1000),
        n=_number(doc, "n", int, default=20),
        master_seed=_number(doc, "master_seed", int, default=0),
    )

    grid = doc.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("field 'grid' must be an object")
    cfg.grid_min = _number(grid, "min", default=cfg.grid_min)
    cfg.grid_step = _number(grid, "step", default=cfg.grid_step)
    cfg.grid_max = _number(grid, "max", default=cfg.grid_max)

    noise = doc.get("noise", {})
    if not isinstance(noise, dict):
        raise ConfigError("field 'noise' must be an object")
    kind = noise.get("kind", cfg.noise_kind)
    if kind not in ("gaussian", "igcg", "none"):
        raise ConfigError(f"field 'noise.kind' must be gaussian, igcg or none, got {kind!r}")
    cfg.noise_kind = kind
    cfg.noise_lambda = _number(noise, "lambda", default=cfg.noise_lambda)
    cfg.noise_variance = _number(noise, "variance", default=cfg.noise_variance)

    methods = doc.get("methods", list(METHODS))
    if not isinstance(methods, list):
        raise ConfigError("field 'methods' must be a list")
    canon = []
    for m in methods:
        name = _METHOD_ALIASES.get(str(m).lower())
        if name is None:
            raise ConfigError(f"field 'methods' has unknown method {m!r}")
        if name not in canon:
            canon.append(name)
    cfg.methods = canon

    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("field 'solver' must be an object")
    cfg.q_quantile = _number(solver, "q_quantile", default=cfg.q_quantile)
    cfg.max_iter = _number(solver, "max_iter", int, default=cfg.max_iter)
    cfg.rel_tol = _number(solver, "rel_tol", default=cfg.rel_tol)

    validate_config(cfg)
    return cfg


def validate_config(cfg):
    checks = [
        ("trials", cfg.trials >= 1, "must be >= 1"),
        ("q", cfg.q >= 1, "must be >= 1"),
        ("n", cfg.n > len(cfg.true_doas), "must exceed the number of sources"),
        ("grid.step", cfg.grid_step > 0, "must be positive"),
        ("grid", -90 <= cfg.grid_min < cfg.grid_max <= 90, "must satisfy -90 <= min < max <= 90"),
        ("noise.lambda", cfg.noise_kind != "igcg" or cfg.noise_lambda > 0, "must be positive"),
        ("noise.variance", cfg.noise_variance > 0, "must be positive"),
        ("solver.q_quantile", 0 < cfg.q_quantile < 1, "must lie in (0, 1)"),
        ("solver.max_iter", cfg.max_iter >= 1, "must be >= 1"),
        ("solver.rel_tol", cfg.rel_tol > 0, "must be positive"),
    ]
    for name, ok, msg in checks:
        if not ok:
            raise ConfigError(f"field '{name}' {msg}")
    grid = cfg.grid()
    seen = set()
    for t in cfg.true_doas:
        try:
            idx = grid.index_of(t)
        except ValueError:
            raise ConfigError(f"field 'true_doas': {t} is not on the grid") from None
        if idx in seen:
            raise ConfigError(f"field 'true_doas': duplicate angle {t}")
        seen.add(idx)


def trial_rng(master_seed, trial):
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial]))


def _run_trial(t, cfg, scenario, A, solver_cfg):
    Y, _ = simulate_snapshots(scenario, trial_rng(cfg.master_seed, t), A)
    K = scenario.K
    out = {}
    for method in cfg.methods:
        try:
            if method == "MUSIC":
                est = music_estimate(Y, scenario.grid, K, A)
            elif method == "SNIHT":
                est = sniht(Y, A, solver_cfg).support
            else:
                est = hub_sniht(Y, A, solver_cfg).support
        except (NumericalError, np.linalg.LinAlgError):
            est = None
        out[method] = est
    return out


def run_experiment(cfg, threads=1):
    """Run all trials and aggregate PER and per-angle estimate frequencies."""
    start = time.perf_counter()
    scenario = cfg.scenario()
    A = steering_matrix(scenario.grid)
    solver_cfg = cfg.solver_config()
    truth = scenario.true_doa_indices

    def task(t):
        return _run_trial(t, cfg, scenario, A, solver_cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(task, range(cfg.trials)))
    else:
        outcomes = [task(t) for t in range(cfg.trials)]

    p = scenario.grid.p
    per, hist, warns = {}, {}, {}
    for method in cfg.methods:
        hits, fails = 0, 0
        counts = np.zeros(p)
        # merged in trial order
        for outcome in outcomes:
            est = outcome[method]
            if est is None:
                fails += 1
                continue
            hits += exact_recovery(est, truth)
            np.add.at(counts, est, 1)
        per[method] = hits / cfg.trials
        hist[method] = (counts / cfg.trials).tolist()
        warns[method] = fails
    return ExperimentResult(per_method=per, histogram=hist,
                            angles=scenario.grid.angles.tolist(),
                            trial_count=cfg.trials, warnings=warns,
                            config=asdict(cfg),
                            wall_time=time.perf_counter() - start)


def per_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "per", "trials", "warnings"])
    for method, value in result.per_method.items():
        w.writerow([method, repr(value), result.trial_count, result.warnings.get(method, 0)])
    return buf.getvalue()


def histogram_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    methods = list(result.histogram)
    w.writerow(["angle_deg"] + methods)
    for j, angle in enumerate(result.angles):
        w.writerow([repr(angle)] + [repr(result.histogram[m][j]) for m in methods])
    return buf.getvalue()


def write_outputs(result, out_dir):
    """Write ``per.csv``, ``histogram.csv`` and ``result.json`` into `out_dir`."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "per.csv": per_csv(result),
        "histogram.csv": histogram_csv(result),
        "result.json": json.dumps(asdict(result), indent=2) + "\n",
    }
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def load_result(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentResult(**json.load(fh))
