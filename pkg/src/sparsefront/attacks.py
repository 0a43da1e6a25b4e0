"""Max-norm-bounded attacks on a linear classifier behind a sparsifying
front end.

Three attacker knowledge levels are modeled.  The baseline attacker knows
only the classifier weights; the semi-white-box attacker knows the weights
and that a front end exists but not the retained support; the white-box
attacker knows the retained support as well and perturbs along the sign of
the projected weights.  Each attack returns the perturbation together with
the closed-form output distortion it induces after sparsification (for the
baseline, the distortion with no front end at all).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .frontend import FrontEndConfig, apply_front_end, proj

__all__ = [
    "AttackKind",
    "AttackReport",
    "attack_baseline",
    "attack_semi_white",
    "attack_white",
    "directed_perturbation",
    "measured_distortion",
]


class AttackKind(enum.Enum):
    BASELINE = "baseline"
    SEMI_WHITE = "semi_white"
    WHITE = "white"


@dataclass(frozen=True)
class AttackReport:
    """Perturbation ``e`` (||e||_inf <= epsilon) and the distortion
    ``delta`` it induces on the classifier score."""

    kind: AttackKind
    epsilon: float
    e: np.ndarray
    delta: float


def _check_eps(epsilon: float):
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")


def attack_baseline(w: np.ndarray, epsilon: float) -> AttackReport:
    """e = eps * sign(w); with no front end the score shifts by
    delta = eps * ||w||_1."""
    _check_eps(epsilon)
    w = np.asarray(w, dtype=float)
    e = epsilon * np.sign(w)
    delta = epsilon * float(np.abs(w).sum())
    return AttackReport(AttackKind.BASELINE, epsilon, e, delta)


def attack_semi_white(
    cfg: FrontEndConfig, w: np.ndarray, x: np.ndarray, epsilon: float
) -> AttackReport:
    """Same perturbation as the baseline, but the distortion is what
    survives the front end: delta = eps * |sign(w)^T proj(w, x)|."""
    _check_eps(epsilon)
    w = np.asarray(w, dtype=float)
    e = epsilon * np.sign(w)
    p = proj(cfg, w, x)
    delta = epsilon * float(abs(np.sign(w) @ p))
    return AttackReport(AttackKind.SEMI_WHITE, epsilon, e, delta)


def attack_white(
    cfg: FrontEndConfig, w: np.ndarray, x: np.ndarray, epsilon: float
) -> AttackReport:
    """e = eps * sign(proj(w, x)), which maximizes the post-front-end
    distortion delta = eps * ||proj(w, x)||_1 in the support-preserving
    regime."""
    _check_eps(epsilon)
    w = np.asarray(w, dtype=float)
    p = proj(cfg, w, x)
    e = epsilon * np.sign(p)
    delta = epsilon * float(np.abs(p).sum())
    return AttackReport(AttackKind.WHITE, epsilon, e, delta)


def directed_perturbation(
    report: AttackReport, label, d1, d2
) -> np.ndarray:
    """Orient the perturbation against the true class: labels equal to
    ``d1`` (score < 0 side) get +e, labels equal to ``d2`` get -e."""
    if label == d1:
        return report.e
    if label == d2:
        return -report.e
    raise ValueError(f"label {label!r} is neither {d1!r} nor {d2!r}")


def measured_distortion(
    cfg: FrontEndConfig | None, w: np.ndarray, x: np.ndarray, e: np.ndarray
) -> float:
    """End-to-end score shift |w^T f(x + e) - w^T x| where f is the front
    end (identity when ``cfg`` is None).  Diagnostic companion to the
    closed-form ``delta``; the two agree when the input is exactly
    K-sparse and the support is preserved."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    xadv = x + np.asarray(e, dtype=float)
    xhat = xadv if cfg is None else apply_front_end(cfg, xadv)
    return float(abs(w @ xhat - w @ x))
