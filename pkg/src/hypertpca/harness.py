"""Seeded Monte Carlo experiments over the detection and recovery pipelines.

Every trial's randomness comes from ``SeedSequence(seed, spawn_key=(trial,
lambda_index, hypothesis))``, so extending the lambda grid or the trial count
never changes rows that were already produced.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from hypertpca.colorcoding import CountingContext, g_necklace_dp, sample_coloring
from hypertpca.counting import (
    exact_detection_sum,
    null_second_moment,
    planted_mean,
    recovery_conditional_mean,
)
from hypertpca.errors import CapacityError, ConfigError, FamilyError, HyperTPCAError
from hypertpca.families import build_chains, build_family, enumerate_blocks, read_manifest
from hypertpca.inference import DetectionConfig, detect, overlap, recover
from hypertpca.tensor_model import ModelParams, sample_planted

TASKS = ("moments", "detect", "recover")
HYPOTHESES = ("Q", "P")
CSV_COLUMNS = ("trial", "hypothesis", "lambda", "statistic", "overlap", "decision", "wall_ms", "seed")

# Refusal thresholds, in estimated elementary operations per statistic.
EXACT_OPS_LIMIT = 1e10
CC_OPS_LIMIT = 1e12


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    p: int
    m: int
    ell: int
    lambda_grid: tuple
    trials: int
    seed: int = 0
    mode: str = "exact"
    task: str = "detect"
    C: float = 0.5
    t_override: int | None = None
    anchor: int = 0
    family: str | None = None  # manifest path; built on demand when absent
    record_timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.mode not in ("exact", "cc"):
            raise ConfigError(f"mode must be 'exact' or 'cc', got {self.mode!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.lambda_grid:
            raise ConfigError("lambda_grid must be nonempty")
        if any(x < 0 for x in self.lambda_grid):
            raise ConfigError("lambda values must be non-negative")
        if self.task == "recover" and any(x == 0 for x in self.lambda_grid):
            raise ConfigError("recovery needs lambda > 0")
        if not 0 < self.C < 1:
            raise ConfigError("C must lie strictly between 0 and 1")
        if self.m < 1 or self.p < 2 or self.ell < 1 or self.n < self.p:
            raise ConfigError("need m >= 1, ell >= 1 and n >= p >= 2")
        if self.t_override is not None and self.t_override < 1:
            raise ConfigError("t_override must be >= 1")
        if not 0 <= self.anchor < self.n:
            raise ConfigError(f"anchor must lie in [0, {self.n})")

    @property
    def kind(self) -> str:
        return "chain" if self.task == "recover" else "necklace"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)


@dataclass
class TrialRecord:
    trial: int
    hypothesis: str
    lam: float
    statistic: float | None
    overlap: float | None
    decision: int | None
    wall_ms: float | None
    seed: int

    def row(self) -> list:
        def fmt(v):
            return "" if v is None else repr(v)

        return [self.trial, self.hypothesis, repr(self.lam), fmt(self.statistic),
                fmt(self.overlap), fmt(self.decision), fmt(self.wall_ms), self.seed]


def trial_seed(seed: int, trial: int, lambda_index: int, hypothesis: str) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(trial, lambda_index, HYPOTHESES.index(hypothesis)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def check_capacity(cfg: ExperimentConfig) -> None:
    mp, mpl = cfg.m * cfg.p, cfg.m * cfg.p * cfg.ell
    if cfg.mode == "exact":
        est = float(cfg.n) ** mpl
        if est > EXACT_OPS_LIMIT:
            raise CapacityError(f"exact mode needs n^(mpl) = {est:.2e} > {EXACT_OPS_LIMIT:.0e} operations")
    else:
        est = float(cfg.n) ** (mp + 3)
        if est > CC_OPS_LIMIT:
            raise CapacityError(f"cc mode needs n^(mp+3) = {est:.2e} > {CC_OPS_LIMIT:.0e} operations")


def load_family(cfg: ExperimentConfig):
    if cfg.family:
        fam = read_manifest(cfg.family)
        if (fam.m, fam.p, fam.ell, fam.kind) != (cfg.m, cfg.p, cfg.ell, cfg.kind):
            raise ConfigError("family manifest does not match (m, p, ell, task)")
        return fam
    return build_family(cfg.m, cfg.p, cfg.ell, cfg.kind)


def _hypotheses(cfg: ExperimentConfig, lam: float) -> tuple:
    if cfg.task == "recover":
        return ("P",)
    if cfg.task == "moments":
        return ("Q",) if lam == 0 else ("P",)
    return HYPOTHESES


def _run_trial(cfg, fam, lam, hyp, trial, seed) -> TrialRecord:
    params = ModelParams(cfg.n, cfg.p, lam if hyp == "P" else 0.0)
    T, xstar = sample_planted(params, seed)
    start = time.perf_counter()
    stat = ov = dec = None
    if cfg.task == "recover":
        res = recover(T, fam.classes, lam, cfg.anchor, cfg.mode, seed, cfg.t_override)
        ov = overlap(res.estimate, xstar)
    else:
        dcfg = DetectionConfig(fam.classes, lam, cfg.C, cfg.mode, seed, cfg.t_override)
        out = detect(T, dcfg)
        stat = out["statistic"]
        if cfg.task == "detect":
            dec = out["decision"]
    wall = round((time.perf_counter() - start) * 1e3, 3) if cfg.record_timing else None
    return TrialRecord(trial, hyp, lam, stat, ov, dec, wall, seed)


def _moments(values: np.ndarray) -> dict:
    k = len(values)

    def se(a):
        return float(a.std(ddof=1) / math.sqrt(k)) if k > 1 else float("nan")

    sq = values ** 2
    return {
        "mean": float(values.mean()),
        "mean_se": se(values),
        "variance": float(values.var(ddof=1)) if k > 1 else float("nan"),
        "second_moment": float(sq.mean()),
        "second_moment_se": se(sq),
    }


def summarize(cfg: ExperimentConfig, fam, records: list) -> dict:
    beta = float(fam.beta) if fam.classes else 0.0
    mpl = cfg.m * cfg.p * cfg.ell
    groups = []
    for lam in cfg.lambda_grid:
        entry = {"lambda": lam}
        by = {h: [r for r in records if r.lam == lam and r.hypothesis == h] for h in HYPOTHESES}
        if cfg.task == "moments":
            h = "Q" if lam == 0 else "P"
            vals = np.array([r.statistic for r in by[h]])
            entry.update(hypothesis=h, trials=len(vals), **_moments(vals))
            entry["null_second_moment"] = null_second_moment(cfg.n, mpl)
            entry["planted_mean"] = planted_mean(cfg.n, cfg.m, cfg.p, cfg.ell, lam, beta)
        elif cfg.task == "detect":
            q = np.array([r.decision for r in by["Q"]], dtype=float)
            p = np.array([r.decision for r in by["P"]], dtype=float)
            entry["type_I"] = float(q.mean())
            entry["type_II"] = float(1 - p.mean())
            entry["error_sum"] = entry["type_I"] + entry["type_II"]
            entry["threshold"] = cfg.C * planted_mean(cfg.n, cfg.m, cfg.p, cfg.ell, lam, beta)
            for h in HYPOTHESES:
                entry[h] = _moments(np.array([r.statistic for r in by[h]]))
        else:
            ov = np.array([r.overlap for r in by["P"]])
            entry["mean_overlap"] = float(ov.mean())
            entry["overlap_quantiles"] = dict(zip(("q10", "q25", "q50", "q75", "q90"),
                                                  map(float, np.quantile(ov, [0.1, 0.25, 0.5, 0.75, 0.9]))))
            entry["conditional_mean"] = recovery_conditional_mean(cfg.n, mpl)
        groups.append(entry)
    return {"config": asdict(cfg), "beta": beta, "classes": len(fam.classes), "results": groups}


def write_csv(records: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def run(cfg: ExperimentConfig, out_dir=None, fam=None) -> dict:
    """Run every (trial, lambda, hypothesis) cell; write trials.csv and summary.json if ``out_dir``."""
    check_capacity(cfg)
    fam = fam or load_family(cfg)
    if not fam.classes:
        raise FamilyError(f"the {cfg.kind} family for (m={cfg.m}, p={cfg.p}, ell={cfg.ell}) is empty")
    records = []
    for li, lam in enumerate(cfg.lambda_grid):
        for hyp in _hypotheses(cfg, lam):
            for trial in range(cfg.trials):
                records.append(_run_trial(cfg, fam, lam, hyp, trial, trial_seed(cfg.seed, trial, li, hyp)))
    records.sort(key=lambda r: (r.trial, cfg.lambda_grid.index(r.lam), r.hypothesis))
    summary = summarize(cfg, fam, records)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trials.csv").write_text(write_csv(records))
        (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str) + "\n")
    summary["records"] = records
    return summary


# --- verification suites ------------------------------------------------------


def _check(name: str, passed: bool, **detail) -> dict:
    return {"name": name, "passed": bool(passed), **detail}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def verify(n: int = 10, seeds: int = 5, m: int = 1, p: int = 3, ell: int = 3) -> list:
    """Oracle-equivalence and family ground-truth checks; failures are report entries."""
    report = []
    try:
        U = enumerate_blocks(1, 3)
        auts = [c.aut_size for c in U.classes]
        report.append(_check("blocks(1,3): one class with |Aut| = 4", auts == [4], aut_sizes=auts,
                             beta_u=str(U.beta_u), beta_diamond=str(U.beta_diamond)))
    except HyperTPCAError as e:
        report.append(_check("blocks(1,3): one class with |Aut| = 4", False, error=str(e)))

    try:
        fam = build_family(m, p, ell, "necklace")
        worst = 0.0
        for s in range(seeds):
            T, _ = sample_planted(ModelParams(n, p, 1.0), s)
            ctx = CountingContext(T)
            c = sample_coloring(n, m * p * ell, np.random.SeedSequence(s, spawn_key=(9,)))
            dp = sum(g_necklace_dp(T, c, H, ctx) for H in fam.classes)
            ex = exact_detection_sum(T, fam.classes, c)
            worst = max(worst, _rel(dp, ex) if (dp or ex) else 0.0)
        report.append(_check(f"necklace DP equals brute force at n={n}", worst <= 1e-9, max_rel_error=worst))
    except HyperTPCAError as e:
        report.append(_check(f"necklace DP equals brute force at n={n}", False, error=str(e)))

    worst_ratio, grid = 0.0, []
    for mm in (1, 2):
        blocks = enumerate_blocks(mm, 3)
        for ll in (1, 2, 3, 4):
            bj = sum((c.beta for c in build_chains(blocks, ll, confirm=False)), Fraction(0))
            bound = blocks.beta_diamond ** ll
            grid.append({"m": mm, "ell": ll, "beta_j": str(bj), "bound": str(bound)})
            if bound:
                worst_ratio = max(worst_ratio, float(bj / bound))
    report.append(_check("beta_J <= (beta_diamond)^ell for m <= 2, p = 3, ell <= 4",
                         all(Fraction(g["beta_j"]) <= Fraction(g["bound"]) for g in grid),
                         max_ratio=worst_ratio, grid=grid))
    return report
