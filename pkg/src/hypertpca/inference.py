"""Decisions built on the counting statistics: thresholded detection and sign-rounding recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hypertpca.colorcoding import CountingContext, detection_plan, f_tilde, phi_tilde_row, recovery_plan
from hypertpca.counting import (
    _classes,
    exact_detection_stat,
    exact_recovery_row,
    family_shape,
    planted_mean,
)
from hypertpca.errors import ParameterError, ShapeError
from hypertpca.tensor_model import Spike, SymmetricTensor

MODES = ("exact", "cc")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class DetectionConfig:
    """Threshold test settings.  ``seed`` and ``t_override`` only matter in cc mode."""

    family: object
    lam: float
    threshold_fraction: float = 0.5
    mode: str = "exact"
    seed: int = 0
    t_override: int | None = None

    def __post_init__(self):
        if not 0 < self.threshold_fraction < 1:
            raise ParameterError("threshold fraction C must lie strictly between 0 and 1")
        if self.lam < 0:
            raise ParameterError("lambda must be non-negative")
        _check_mode(self.mode)


def detection_threshold(n: int, fam, lam: float, C: float) -> float:
    """tau = C times the exact finite-n planted mean of the normalized statistic."""
    classes = _classes(fam)
    m, p, ell, _ = family_shape(classes)
    beta = sum(c.beta for c in classes)
    return C * planted_mean(n, m, p, ell, lam, beta)


def detection_statistic(T: SymmetricTensor, cfg: DetectionConfig, ctx=None) -> float:
    classes = _classes(cfg.family)
    if cfg.mode == "exact":
        return exact_detection_stat(T, classes)
    m, p, ell, _ = family_shape(classes)
    plan = detection_plan(m, p, ell, cfg.seed, cfg.t_override)
    return f_tilde(T, classes, plan, ctx=ctx)


def decide(statistic: float, threshold: float) -> int:
    return int(statistic >= threshold)


def detect(T: SymmetricTensor, cfg: DetectionConfig, ctx=None) -> dict:
    threshold = detection_threshold(T.n, cfg.family, cfg.lam, cfg.threshold_fraction)
    stat = detection_statistic(T, cfg, ctx)
    return {"decision": decide(stat, threshold), "statistic": stat, "threshold": threshold}


@dataclass(frozen=True)
class RecoveryResult:
    estimate: Spike
    anchor: int
    scores: np.ndarray


def round_scores(scores, anchor: int) -> Spike:
    """+1 at the anchor and where the score is positive; -1 elsewhere, ties included."""
    x = np.where(np.asarray(scores) > 0, 1, -1).astype(np.int8)
    x[anchor] = 1
    return Spike(x)


def recovery_scores(
    T: SymmetricTensor, fam, lam: float, anchor: int = 0, mode: str = "exact",
    seed: int = 0, t_override: int | None = None, ctx=None,
) -> np.ndarray:
    _check_mode(mode)
    classes = _classes(fam)
    if not 0 <= anchor < T.n:
        raise ParameterError(f"anchor {anchor} outside [0, {T.n})")
    beta_j = sum(c.beta for c in classes)
    if mode == "exact":
        return exact_recovery_row(T, classes, beta_j, lam, anchor)
    m, p, ell, _ = family_shape(classes)
    plan = recovery_plan(m, p, ell, seed, t_override)
    return phi_tilde_row(T, classes, plan, lam, anchor, beta_j, ctx)


def recover(
    T: SymmetricTensor, fam, lam: float, anchor: int = 0, mode: str = "exact",
    seed: int = 0, t_override: int | None = None, ctx=None,
) -> RecoveryResult:
    scores = recovery_scores(T, fam, lam, anchor, mode, seed, t_override, ctx)
    return RecoveryResult(round_scores(scores, anchor), anchor, scores)


def overlap(xhat, xstar) -> float:
    a = np.asarray(getattr(xhat, "entries", xhat), dtype=float)
    b = np.asarray(getattr(xstar, "entries", xstar), dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    # one square root keeps the +-1 case exact: |<a, b>| / n
    denom = math.sqrt(float(a @ a) * float(b @ b))
    return min(abs(float(a @ b)) / denom, 1.0) if denom else 0.0
