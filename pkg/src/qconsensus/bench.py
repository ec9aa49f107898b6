"""Monte Carlo experiments over random sensor networks.

Seeding: trial ``k`` of an experiment with base seed ``s`` gets the seed
``SeedSequence([s, k])`` (first 64-bit word). The graph is drawn from
``SeedSequence([trial_seed, 0])`` (redrawn via ``network.attempt_seed`` while
disconnected) and the initial states from ``SeedSequence([trial_seed, 1])``.
A trial therefore depends only on ``(s, k)``, never on execution order.
"""
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from qconsensus import network
from qconsensus.engine import codec_factory, metrics, run_consensus
from qconsensus.errors import NonPositiveLogArgument, ParameterOutOfRange
from qconsensus.schedule import DEFAULT_CLAMP, exponential_params, progressive_schedule

log = logging.getLogger(__name__)

# progq uses the closed-form exponential schedule; progq-rec the recursive one
CODECS = {
    "progq": ("progressive", "exponential"),
    "progq-rec": ("progressive", "recursive"),
    "unifq": ("uniform", None),
    "zoomq": ("zoom", None),
    "adaptq": ("adapt", None),
    "ideal": (None, None),
}
WEIGHTS = ("metropolis", "laplacian")
CSV_COLUMNS = ["codec", "n", "weights", "t", "err_mean", "err_std", "var_mean", "clip_mean"]


@dataclass
class ExperimentConfig:
    m: int = 40
    radius: float = None  # None: sqrt(log m / m)
    weights: list = field(default_factory=lambda: ["metropolis"])
    laplacian_a: float = None  # None: 0.99 / d_max
    codecs: list = field(default_factory=lambda: ["progq", "unifq"])
    bits: list = field(default_factory=lambda: [2, 4, 6])
    trials: int = 200
    horizon: int = 100
    seed: int = 0
    clamp_delta: float = DEFAULT_CLAMP
    lo: float = 0.0
    hi: float = 1.0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ParameterOutOfRange("trials must be at least 1")
        if self.horizon < 1:
            raise ParameterOutOfRange("horizon must be at least 1")
        if not self.bits or any(int(b) < 1 for b in self.bits):
            raise ParameterOutOfRange("every bit budget must be at least 1")
        if self.m < 2:
            raise ParameterOutOfRange("m must be at least 2")
        for c in self.codecs:
            if c not in CODECS:
                raise ParameterOutOfRange(f"unknown codec {c!r}; choose from {sorted(CODECS)}")
        for w in self.weights:
            if w not in WEIGHTS:
                raise ParameterOutOfRange(f"unknown weights {w!r}; choose from {WEIGHTS}")
        if not self.hi > self.lo:
            raise ParameterOutOfRange("initial interval must have hi > lo")

    @property
    def effective_radius(self):
        return network.default_radius(self.m) if self.radius is None else self.radius

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterOutOfRange(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ResultTable:
    """Per-(codec, n, weights) arrays over t = 0..T, aggregated across trials."""

    horizon: int
    series: dict  # (codec, n, weights) -> dict of arrays
    trial_seeds: list
    excluded: list = field(default_factory=list)
    rejections: list = field(default_factory=list)

    def rows(self):
        for (codec, n, weights), s in self.series.items():
            for t in range(self.horizon + 1):
                yield {
                    "codec": codec, "n": n, "weights": weights, "t": t,
                    "err_mean": s["err_mean"][t], "err_std": s["err_std"][t],
                    "var_mean": s["var_mean"][t], "clip_mean": s["clip_mean"][t],
                }

    def get(self, codec, n, weights="metropolis"):
        return self.series[(codec, n, weights)]


def trial_seed(base_seed, k):
    return int(np.random.SeedSequence([base_seed, k]).generate_state(1, np.uint64)[0])


def _sub_seed(seed, which):
    return int(np.random.SeedSequence([seed, which]).generate_state(1, np.uint64)[0])


def build_weights(g, kind, a=None):
    if kind == "metropolis":
        return network.metropolis_weights(g)
    return network.laplacian_weights(g, a)


def run_trial(cfg, k):
    """One network realization: every (weights, n, codec) run on the same graph and initial states."""
    seed = trial_seed(cfg.seed, k)
    g, rejected = network.connected_rgg(cfg.m, cfg.effective_radius, _sub_seed(seed, 0))
    z0 = np.random.default_rng(_sub_seed(seed, 1)).uniform(cfg.lo, cfg.hi, cfg.m)
    z0_inf = float(np.max(np.abs(z0)))
    s0 = cfg.hi - cfg.lo
    out = {"seed": seed, "rejected": rejected, "runs": {}, "excluded": []}
    needs_schedule = any(CODECS[c][0] == "progressive" for c in cfg.codecs)
    for wk in cfg.weights:
        w = build_weights(g, wk, cfg.laplacian_a)
        for n in cfg.bits:
            if needs_schedule:
                try:
                    exponential_params(w.lambda2, w.lambda_min, n, z0_inf)
                except (NonPositiveLogArgument, ParameterOutOfRange) as exc:
                    # lambda2 = 0 (one-step consensus) also has no exponential schedule
                    out["excluded"].append({"trial": k, "seed": seed, "weights": wk, "n": n,
                                            "min_bits": getattr(exc, "min_bits", None), "reason": str(exc)})
                    continue
            for name in cfg.codecs:
                kind, source = CODECS[name]
                schedule = None
                if kind == "progressive":
                    schedule = progressive_schedule(w, n, z0_inf, s0, cfg.horizon, source, cfg.clamp_delta)
                factory = None if kind is None else codec_factory(kind, n, cfg.lo, cfg.hi)
                ms = metrics(run_consensus(w, z0, factory, schedule, cfg.horizon))
                out["runs"][(name, n, wk)] = (ms.err, ms.noise_var, ms.clip.astype(float))
    return out


def _aggregate(stack):
    arr = np.asarray(stack)
    return arr.mean(axis=0), arr.std(axis=0)


def run_experiment(cfg):
    cfg.validate()
    ks = list(range(cfg.trials))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_trial, [cfg] * len(ks), ks))
    else:
        results = [run_trial(cfg, k) for k in ks]

    collected = {}
    excluded = []
    for res in results:  # trial order, independent of completion order
        excluded.extend(res["excluded"])
        for key, val in res["runs"].items():
            collected.setdefault(key, []).append(val)
    if excluded:
        log.warning("%d (trial, weights, n) combinations excluded as infeasible", len(excluded))

    series = {}
    for name in cfg.codecs:
        for n in cfg.bits:
            for wk in cfg.weights:
                runs = collected.get((name, n, wk))
                if not runs:
                    nan = np.full(cfg.horizon + 1, np.nan)
                    series[(name, n, wk)] = {"err_mean": nan, "err_std": nan, "var_mean": nan,
                                             "clip_mean": nan, "count": 0}
                    continue
                err_mean, err_std = _aggregate([r[0] for r in runs])
                var_mean, _ = _aggregate([r[1] for r in runs])
                clip_mean, _ = _aggregate([r[2] for r in runs])
                series[(name, n, wk)] = {"err_mean": err_mean, "err_std": err_std,
                                         "var_mean": var_mean, "clip_mean": clip_mean,
                                         "count": len(runs)}
    return ResultTable(horizon=cfg.horizon, series=series, trial_seeds=[r["seed"] for r in results],
                       excluded=excluded, rejections=[r["rejected"] for r in results])


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_table(tbl, path, fmt="csv"):
    """CSV or JSON; floats carry 12 significant digits."""
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for row in (tbl.rows() if tbl is not None else []):
                    writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        elif fmt == "json":
            rows = [] if tbl is None else [
                {c: (row[c] if c in ("codec", "n", "weights", "t") else float(_fmt(row[c])))
                 for c in CSV_COLUMNS} for row in tbl.rows()]
            doc = {"columns": CSV_COLUMNS, "rows": rows,
                   "trial_seeds": [] if tbl is None else [str(s) for s in tbl.trial_seeds],
                   "excluded": [] if tbl is None else tbl.excluded}
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1, allow_nan=True)
                fh.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc}") from exc


def read_table_csv(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {"codec": row["codec"], "n": int(row["n"]), "weights": row["weights"], "t": int(row["t"])}
            for c in CSV_COLUMNS[4:]:
                rec[c] = float(row[c])
            out.append(rec)
    return out


def config_dict(cfg):
    return asdict(cfg)
