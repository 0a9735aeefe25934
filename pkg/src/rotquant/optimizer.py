"""Alternating minimization of the weighted quantization loss over rotations.

Each iteration quantize-dequantizes the rotated activations (centroid
step) and then solves a weighted orthogonal Procrustes problem for the
rotation that best maps activations onto those fixed reconstruction
targets.  The recorded loss is

    bulk_mean_sq_error + gamma * massive_mean_sq_error

(gamma = inf switches to the massive mean alone).  Token weights in the
Procrustes step are normalized by subset size (1/|bulk| and
gamma/|massive|) so the SVD step is the exact minimizer of that recorded
loss; post-step loss can therefore never exceed pre-step loss under
fixed centroids.  The returned rotation is the best fresh-quantization
iterate, not necessarily the last.
"""

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DataError, NumericalError
from .massive import coerce_flags
from .quantizer import QuantConfig, _as_matrix, _check_finite, quant_error
from .rotations import (
    RotationMatrix,
    enforce_rotation,
    hadamard_randomized,
    orthogonal_random,
)

# singular-value ratio below which the Procrustes solution is non-unique
DEGENERATE_SV_RATIO = 1e-12

_DEGENERATE_MSG = (
    "cross-covariance is rank-deficient; the rotation step is optimal but not unique"
)


@dataclass
class OptimizerConfig:
    """Knobs for optimize(); defaults follow the 100-round recipe."""

    iterations: int = 100
    gamma: float = 100.0
    quant: QuantConfig = field(default_factory=QuantConfig)
    init: str = "rh"
    seed: int = 0
    enforce_det_plus_one: bool = True
    early_stop: bool = False
    early_stop_rel_tol: float = 1e-8
    early_stop_patience: int = 10
    init_entries: np.ndarray | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not (self.gamma >= 0.0):
            raise ValueError("gamma must be >= 0 (math.inf selects massive-only mode)")
        if self.init not in ("rh", "ro", "file"):
            raise ValueError(f"init must be 'rh', 'ro' or 'file', got {self.init!r}")
        if self.init == "file" and self.init_entries is None:
            raise ValueError("init='file' requires init_entries")


@dataclass
class IterationRecord:
    """Losses around one rotation step.

    loss_before is the fresh-quantization weighted loss of the incoming
    rotation; loss_after is evaluated with the same (now stale) centroids
    after the rotation step.  bulk/massive are the subset means of the
    fresh evaluation.
    """

    iteration: int
    loss_before: float
    loss_after: float
    bulk_loss: float
    massive_loss: float

    def to_dict(self):
        return {
            "iter": self.iteration,
            "weighted_loss_before_rotation_step": self.loss_before,
            "weighted_loss_after_rotation_step": self.loss_after,
            "bulk_loss": self.bulk_loss,
            "massive_loss": self.massive_loss,
        }


@dataclass
class OptimizerTrace:
    """Per-iteration records plus the selected rotation.

    The closing record (iteration == config.iterations, unless early
    stop shortened the run) is the final fresh evaluation of the last
    rotation; it performs no step, so loss_after == loss_before there.
    """

    records: list
    final_rotation: RotationMatrix
    best_iteration: int
    early_stopped: bool = False

    def to_jsonl(self):
        return "\n".join(json.dumps(r.to_dict()) for r in self.records) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "iter",
                "weighted_loss_before_rotation_step",
                "weighted_loss_after_rotation_step",
                "bulk_loss",
                "massive_loss",
            ]
        )
        for r in self.records:
            writer.writerow(
                [
                    r.iteration,
                    repr(r.loss_before),
                    repr(r.loss_after),
                    repr(r.bulk_loss),
                    repr(r.massive_loss),
                ]
            )
        return buf.getvalue()


def _flags_from(mask, tokens):
    if mask is None:
        return np.zeros(tokens, dtype=bool)
    flags = coerce_flags(mask)
    if flags.shape[0] != tokens:
        raise DataError(f"mask covers {flags.shape[0]} tokens, activations have {tokens}")
    return flags


def token_weights(flags, gamma):
    """Per-token Procrustes weights matching the recorded weighted loss.

    Subset-size normalization makes sum_t w_t * e_t equal exactly
    bulk_mean + gamma * massive_mean (or the massive mean alone when
    gamma is inf).  With no massive tokens the weights are uniform 1/T,
    independent of gamma.
    """
    n = flags.shape[0]
    n_massive = int(flags.sum())
    n_bulk = n - n_massive
    if n_massive == 0:
        return np.full(n, 1.0 / n)
    w = np.zeros(n)
    if math.isinf(gamma):
        w[flags] = 1.0 / n_massive
        return w
    if n_bulk:
        w[~flags] = 1.0 / n_bulk
    w[flags] = gamma / n_massive
    return w


def _loss_parts(per_token, flags, gamma):
    massive = per_token[flags]
    bulk = per_token[~flags]
    massive_mean = float(massive.mean()) if massive.size else 0.0
    bulk_mean = float(bulk.mean()) if bulk.size else 0.0
    if math.isinf(gamma):
        return massive_mean, bulk_mean, massive_mean
    return bulk_mean + gamma * massive_mean, bulk_mean, massive_mean


def weighted_loss(x, rotation, mask, gamma, config=None):
    """Weighted quantization loss of a rotation on (optionally masked) data."""
    if not (gamma >= 0.0):
        raise ValueError("gamma must be >= 0")
    report = quant_error(x, rotation, config, mask)
    flags = _flags_from(mask, report.per_token.shape[0])
    loss, _, _ = _loss_parts(report.per_token, flags, gamma)
    return loss


def centroid_step(x, rotation, config=None):
    """Quantize-dequantize the rotated activations (fixed-rotation step)."""
    config = config or QuantConfig()
    y = _as_matrix(x)
    r = np.asarray(getattr(rotation, "entries", rotation), dtype=np.float64)
    return kernels.quantize_dequantize(y @ r, config.bits, config.alpha, config.beta)


def procrustes_step(x, eta, weights=None, enforce_det_plus_one=False):
    """Orthogonal matrix closest to mapping x onto eta, optionally weighted.

    Solves min_R sum_t w_t ||x_t R - eta_t||^2 over orthogonal R via the
    SVD of X^T diag(w) eta (tokens row-scaled by sqrt(w)).  U and V
    columns are sign-normalized (largest-magnitude U entry positive) so
    results do not depend on LAPACK sign conventions.  With
    enforce_det_plus_one the V column paired with the smallest singular
    value is negated when needed, which is the loss-optimal det = +1
    correction.  A rank-deficient cross-covariance is not an error; it
    warns that the optimum is not unique.
    """
    y = _as_matrix(x)
    target = np.ascontiguousarray(eta, dtype=np.float64)
    if target.shape != y.shape:
        raise DataError(f"eta shape {target.shape} does not match activations {y.shape}")
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (y.shape[0],) or (w < 0).any():
            raise DataError("weights must be one non-negative value per token")
        sw = np.sqrt(w)[:, None]
        y = y * sw
        target = target * sw
    m = y.T @ target
    try:
        u, sig, vt = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed on the cross-covariance: {exc}") from exc
    cols = np.arange(u.shape[1])
    signs = np.sign(u[np.argmax(np.abs(u), axis=0), cols])
    signs[signs == 0.0] = 1.0
    u = u * signs
    vt = vt * signs[:, None]
    r = u @ vt
    if enforce_det_plus_one:
        det_sign, _ = np.linalg.slogdet(r)
        if det_sign < 0:
            vt = vt.copy()
            vt[np.argmin(sig), :] *= -1.0
            r = u @ vt
    if sig.size and sig[np.argmin(sig)] < DEGENERATE_SV_RATIO * max(sig.max(), 1e-300):
        warnings.warn(_DEGENERATE_MSG, RuntimeWarning, stacklevel=2)
    return RotationMatrix.from_entries(r, "optimized")


def _initial_rotation(dim, config):
    if config.init == "rh":
        return hadamard_randomized(dim, config.seed)
    if config.init == "ro":
        return orthogonal_random(dim, config.seed)
    rot = RotationMatrix.from_entries(config.init_entries, "loaded")
    if rot.dim != dim:
        raise DataError(f"initial rotation dim {rot.dim} does not match channels {dim}")
    return rot


def optimize(x, mask=None, config=None):
    """Alternate centroid and rotation steps; return (rotation, trace).

    The rotation returned is the iterate with the lowest fresh-
    quantization weighted loss among R_0 .. R_iterations.
    """
    config = config or OptimizerConfig()
    y = _as_matrix(x)
    _check_finite(y, "activations")
    flags = _flags_from(mask, y.shape[0])
    if math.isinf(config.gamma) and not flags.any():
        raise DataError("gamma=inf optimizes the massive subset only; the mask is empty")
    weights = token_weights(flags, config.gamma)
    quant = config.quant

    rot = _initial_rotation(y.shape[1], config)
    if config.enforce_det_plus_one:
        rot = enforce_rotation(rot)

    def fresh_eval(current):
        z = y @ current.entries
        eta = kernels.quantize_dequantize(z, quant.bits, quant.alpha, quant.beta)
        per_token = np.einsum("tc,tc->t", z - eta, z - eta)
        return eta, _loss_parts(per_token, flags, config.gamma)

    records = []
    best_loss, best_rot, best_iter = math.inf, rot, 0
    flat_streak = 0
    prev_loss = None
    early_stopped = False

    for k in range(config.iterations):
        eta, (loss_before, bulk_loss, massive_loss) = fresh_eval(rot)
        if loss_before < best_loss:
            best_loss, best_rot, best_iter = loss_before, rot, k
        new_rot = procrustes_step(y, eta, weights, config.enforce_det_plus_one)
        z_after = y @ new_rot.entries
        per_token_after = np.einsum("tc,tc->t", z_after - eta, z_after - eta)
        loss_after, _, _ = _loss_parts(per_token_after, flags, config.gamma)
        records.append(IterationRecord(k, loss_before, loss_after, bulk_loss, massive_loss))
        rot = new_rot
        if config.early_stop and prev_loss is not None:
            rel = abs(loss_before - prev_loss) / max(abs(prev_loss), 1e-300)
            flat_streak = flat_streak + 1 if rel < config.early_stop_rel_tol else 0
            if flat_streak >= config.early_stop_patience:
                early_stopped = True
        prev_loss = loss_before
        if early_stopped:
            break

    # closing record: fresh evaluation of the last rotation, no step taken
    _, (final_loss, bulk_loss, massive_loss) = fresh_eval(rot)
    if final_loss < best_loss:
        best_loss, best_rot, best_iter = final_loss, rot, len(records)
    records.append(
        IterationRecord(len(records), final_loss, final_loss, bulk_loss, massive_loss)
    )
    trace = OptimizerTrace(
        records=records,
        final_rotation=best_rot,
        best_iteration=best_iter,
        early_stopped=early_stopped,
    )
    return best_rot, trace
