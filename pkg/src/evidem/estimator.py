"""Evidential EM for censored Rayleigh mixtures.

Each record carries a soft label: a contour function giving the
plausibility of every component.  The generalized observed-data
log-likelihood weighs each component's density (observed records) or
survival (censored records) by that plausibility:

    sum_obs  log sum_z lambda_z f(y*; xi_z) pl(z)
  + sum_cens log sum_z lambda_z S(y*; xi_z) pl(z)

The E-step combines the model-based posterior with the soft label, which
collapses to renormalizing lambda * (f or S) * pl per record; the M-step is
closed form because the censored second moment of a Rayleigh component is
exact.  Vacuous labels (all ones) recover classical EM; certain labels
recover supervised fitting.  Everything is computed in log space and
normalized by row-max subtraction, never by flooring.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .belief import ContourFunction, Frame
from .censoring import CensoredDataset
from .rayleigh import MixtureParams

__all__ = [
    "EstimationError",
    "ComponentStarvedError",
    "DegenerateLikelihoodError",
    "DegenerateLikelihoodWarning",
    "LabelMode",
    "SoftLabeledDataset",
    "E2MConfig",
    "E2MTrace",
    "generalized_loglik",
    "e_step",
    "m_step",
    "fit",
    "make_soft_labels",
    "quantile_spread_init",
    "write_soft_labels_csv",
    "read_soft_labels_csv",
]

# A component whose total posterior weight falls below STARVATION_FRAC * n
# can no longer be updated meaningfully; the fit aborts rather than restart.
STARVATION_FRAC = 1e-10


class EstimationError(RuntimeError):
    """Base class for unrecoverable estimation failures."""


class ComponentStarvedError(EstimationError):
    """Some component received (numerically) zero posterior weight."""


class DegenerateLikelihoodError(EstimationError):
    """A record is impossible under every component it finds plausible."""

    def __init__(self, message: str, trace: "E2MTrace | None" = None):
        super().__init__(message)
        self.trace = trace


class DegenerateLikelihoodWarning(RuntimeWarning):
    """Signal that the generalized log-likelihood degenerated to -inf."""


class LabelMode(str, Enum):
    """The three supervision regimes: soft, hard, and absent labels."""

    UNCERTAIN = "uncertain"
    NOISY = "noisy"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class SoftLabeledDataset:
    """A censored dataset plus one plausibility row per record."""

    data: CensoredDataset
    pl: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pl, dtype=float).copy()
        if arr.ndim != 2 or arr.shape[0] != self.data.n:
            raise ValueError(f"plausibility matrix must have {self.data.n} rows, got {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("plausibilities must lie in [0, 1]")
        if np.any(arr.max(axis=1) <= 0.0):
            bad = np.flatnonzero(arr.max(axis=1) <= 0.0)
            raise ValueError(f"record(s) {bad.tolist()} have all-zero plausibility")
        arr.flags.writeable = False
        object.__setattr__(self, "pl", arr)

    @classmethod
    def from_contours(cls, data: CensoredDataset, labels: Sequence[ContourFunction]) -> "SoftLabeledDataset":
        if len(labels) != data.n:
            raise ValueError(f"need {data.n} contour functions, got {len(labels)}")
        sizes = {cf.frame.size for cf in labels}
        if len(sizes) != 1:
            raise ValueError("all contour functions must share one frame")
        return cls(data, np.vstack([cf.pl for cf in labels]))

    @property
    def n_components(self) -> int:
        return int(self.pl.shape[1])

    def contour(self, j: int) -> ContourFunction:
        return ContourFunction(Frame(self.n_components), self.pl[j])


@dataclass(frozen=True)
class E2MConfig:
    """Convergence control.

    ``tol`` is the relative improvement of the generalized log-likelihood
    below which iteration stops.  ``floor``, when positive, clips posterior
    rows from below before renormalizing; the default applies no flooring.
    """

    max_iters: int = 1000
    tol: float = 1e-8
    floor: float = 0.0

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.floor < 0.0:
            raise ValueError("floor must be nonnegative")


@dataclass
class E2MTrace:
    """Per-iteration parameters and generalized log-likelihood."""

    iterates: list[tuple[MixtureParams, float]]
    converged: bool
    iterations_used: int

    @property
    def gll_values(self) -> np.ndarray:
        return np.array([g for _, g in self.iterates])

    @property
    def final_params(self) -> MixtureParams:
        return self.iterates[-1][0]


def _log_weight_matrix(ds: SoftLabeledDataset, params: MixtureParams) -> np.ndarray:
    """(n, p) matrix of log[ lambda_z * (f or S)(y*_j; xi_z) * pl_j(z) ]."""
    if params.n_components != ds.n_components:
        raise ValueError("parameter and label dimensions disagree")
    y = ds.data.y_star
    obs = ds.data.observed
    xis = params.xis
    y2 = y**2
    with np.errstate(divide="ignore"):
        out = np.log(params.lambdas) - 0.5 * np.outer(y2, xis**2)
        # observed records additionally carry the density factor xi^2 * y
        out[obs] += 2.0 * np.log(xis) + np.log(y[obs])[:, None]
        out += np.log(ds.pl)
    return out


def _row_logsumexp(mat: np.ndarray) -> np.ndarray:
    hi = mat.max(axis=1)
    ok = np.isfinite(hi)
    out = np.full(mat.shape[0], -np.inf)
    if np.any(ok):
        shifted = np.exp(mat[ok] - hi[ok, None])
        out[ok] = hi[ok] + np.log(shifted.sum(axis=1))
    return out


def generalized_loglik(ds: SoftLabeledDataset, params: MixtureParams) -> float:
    """Generalized observed-data log-likelihood of ``params``.

    Returns -inf (after emitting a :class:`DegenerateLikelihoodWarning`
    naming the offending records) when some record is impossible under
    every component its soft label allows.
    """
    rows = _row_logsumexp(_log_weight_matrix(ds, params))
    bad = np.flatnonzero(np.isneginf(rows))
    if bad.size:
        warnings.warn(
            f"record(s) {bad.tolist()} have zero likelihood under every plausible component",
            DegenerateLikelihoodWarning,
            stacklevel=2,
        )
        return -np.inf
    return float(rows.sum())


def _posterior_from_logs(mat: np.ndarray, floor: float = 0.0) -> np.ndarray:
    hi = mat.max(axis=1)
    bad = np.flatnonzero(~np.isfinite(hi))
    if bad.size:
        raise DegenerateLikelihoodError(
            f"record(s) {bad.tolist()}: prior plausibility conflicts with every component"
        )
    w = np.exp(mat - hi[:, None])
    if floor > 0.0:
        w = np.maximum(w, floor)
    return w / w.sum(axis=1, keepdims=True)


def e_step(ds: SoftLabeledDataset, params: MixtureParams, floor: float = 0.0) -> np.ndarray:
    """Posterior component weights, one row per record, rows summing to 1.

    Each row is the combination of the model-based posterior (density-based
    for observed records, survival-based for censored ones) with the
    record's soft label, i.e. proportional to lambda * (f or S) * pl.
    """
    return _posterior_from_logs(_log_weight_matrix(ds, params), floor)


def m_step(ds: SoftLabeledDataset, W: np.ndarray, params_k: MixtureParams) -> MixtureParams:
    """Closed-form maximizer of the expected complete-data log-likelihood.

    lambda_z   = mean_j W_jz
    xi_z^2     = 2 sum_j W_jz / [ sum_obs W_jz y*^2
                                  + sum_cens W_jz (y*^2 + 2 / xi_z(k)^2) ]

    The censored term is the exact truncated second moment under the
    current parameters, never a numerical integral.
    """
    W = np.asarray(W, dtype=float)
    n, p = W.shape
    if n != ds.data.n or p != ds.n_components:
        raise ValueError("posterior matrix shape does not match the dataset")
    y2 = ds.data.y_star**2
    cens = ~ds.data.observed
    weight = W.sum(axis=0)
    starved = np.flatnonzero(weight < STARVATION_FRAC * n)
    if starved.size:
        raise ComponentStarvedError(f"component(s) {starved.tolist()} received no posterior weight")
    denom = W.T @ y2 + W[cens].sum(axis=0) * 2.0 / params_k.xis**2
    if np.any(denom <= 0.0):
        bad = np.flatnonzero(denom <= 0.0)
        raise ComponentStarvedError(f"component(s) {bad.tolist()} have a degenerate moment denominator")
    lambdas = weight / weight.sum()
    xis = np.sqrt(2.0 * weight / denom)
    return MixtureParams(lambdas, xis)


def fit(
    ds: SoftLabeledDataset,
    init: MixtureParams,
    config: E2MConfig = E2MConfig(),
) -> tuple[MixtureParams, E2MTrace]:
    """Alternate E- and M-steps from ``init`` until the generalized
    log-likelihood improvement falls below ``config.tol`` (relative) or
    ``config.max_iters`` updates have been applied.

    Returns the final parameters and the full iteration trace.  Raises
    :class:`DegenerateLikelihoodError` (with the partial trace attached)
    if the log-likelihood leaves the finite range, and propagates
    :class:`ComponentStarvedError` from the M-step.
    """
    params = init
    mat = _log_weight_matrix(ds, params)
    gll = _finite_gll(mat, trace=None)
    iterates: list[tuple[MixtureParams, float]] = [(params, gll)]
    converged = False
    for _ in range(config.max_iters):
        W = _posterior_from_logs(mat, config.floor)
        params_new = m_step(ds, W, params)
        mat = _log_weight_matrix(ds, params_new)
        gll_new = _finite_gll(mat, trace=E2MTrace(iterates, False, len(iterates) - 1))
        iterates.append((params_new, gll_new))
        rel = (gll_new - gll) / max(abs(gll), np.finfo(float).tiny)
        params, gll = params_new, gll_new
        if rel < config.tol:
            converged = True
            break
    return params, E2MTrace(iterates, converged, len(iterates) - 1)


def _finite_gll(mat: np.ndarray, trace: E2MTrace | None) -> float:
    rows = _row_logsumexp(mat)
    bad = np.flatnonzero(~np.isfinite(rows))
    if bad.size:
        raise DegenerateLikelihoodError(
            f"generalized log-likelihood is non-finite at record(s) {bad.tolist()}", trace=trace
        )
    return float(rows.sum())


def make_soft_labels(
    mode: LabelMode | str,
    n_components: int,
    n_items: int | None = None,
    hard_labels: np.ndarray | None = None,
    error_probs: np.ndarray | None = None,
) -> np.ndarray:
    """Plausibility matrix for one supervision regime.

    UNKNOWN ignores labels entirely (vacuous rows of ones).  NOISY takes the
    hard labels at face value (indicator rows).  UNCERTAIN tempers a hard
    label with its error probability q: the labelled component gets
    q/p + 1 - q, every other component q/p.
    """
    mode = LabelMode(mode)
    p = int(n_components)
    if mode is LabelMode.UNKNOWN:
        if n_items is None:
            if hard_labels is None:
                raise ValueError("UNKNOWN mode needs n_items (or hard_labels for its length)")
            n_items = len(hard_labels)
        return np.ones((int(n_items), p))
    if hard_labels is None:
        raise ValueError(f"{mode.value} mode needs hard labels")
    z = np.asarray(hard_labels, dtype=int)
    if np.any((z < 0) | (z >= p)):
        raise ValueError("hard labels must be 0-based component indices")
    onehot = np.zeros((z.size, p))
    onehot[np.arange(z.size), z] = 1.0
    if mode is LabelMode.NOISY:
        return onehot
    if error_probs is None:
        raise ValueError("UNCERTAIN mode needs error probabilities")
    q = np.asarray(error_probs, dtype=float)
    if q.shape != z.shape:
        raise ValueError("error_probs must match hard_labels in length")
    if np.any((q < 0.0) | (q > 1.0)):
        raise ValueError("error probabilities must lie in [0, 1]")
    return q[:, None] / p + (1.0 - q)[:, None] * onehot


def quantile_spread_init(ds: CensoredDataset, n_components: int) -> MixtureParams:
    """Data-driven starting point: uniform weights, one xi per spread quantile.

    Component z is given the xi that would put the empirical
    (z + 1)/(p + 1) quantile of the observed times at that same quantile
    of a single Rayleigh component.
    """
    p = int(n_components)
    t = np.sort(ds.observed_times)
    if t.size == 0:
        raise ValueError("cannot initialize from a dataset with no observed failures")
    levels = (np.arange(p) + 1.0) / (p + 1.0)
    anchors = np.quantile(t, levels)
    anchors = np.maximum(anchors, np.finfo(float).tiny)
    xis = np.sqrt(-2.0 * np.log1p(-levels)) / anchors
    return MixtureParams(np.full(p, 1.0 / p), xis)


def write_soft_labels_csv(pl: np.ndarray, path, item_ids: np.ndarray | None = None) -> None:
    """CSV form: item_id, pl_1, ..., pl_p (ids written 1-based)."""
    pl = np.asarray(pl, dtype=float)
    n, p = pl.shape
    ids = np.arange(n) if item_ids is None else np.asarray(item_ids, dtype=int)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item_id"] + [f"pl_{z + 1}" for z in range(p)])
        for i in range(n):
            writer.writerow([int(ids[i]) + 1] + [repr(float(v)) for v in pl[i]])


def read_soft_labels_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (item_ids 0-based, plausibility matrix) in file row order."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "item_id" or len(header) < 2:
            raise ValueError(f"{path}: expected header item_id, pl_1, ..., pl_p")
        rows = [(int(r[0]) - 1, [float(v) for v in r[1:]]) for r in reader if r]
    ids = np.array([i for i, _ in rows], dtype=int)
    pl = np.array([v for _, v in rows], dtype=float)
    return ids, pl
