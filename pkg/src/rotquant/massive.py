"""Detection of massive-activation tokens.

A token is flagged when its l-infinity norm reaches tau_rel times the
median l-infinity norm over the batch (and, when set, the absolute
floor tau_abs).  Detection runs on unrotated activations; the resulting
mask is frozen and reused across optimizer iterations.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError


@dataclass
class MassiveMask:
    """Boolean token flags plus the statistics/thresholds that produced them.

    tau_rel is None for ground-truth masks coming from the synthetic
    generator (there is no rule to record then).
    """

    flags: np.ndarray
    tau_rel: float | None
    tau_abs: float | None
    linf: np.ndarray | None
    median_linf: float

    @property
    def count(self):
        return int(self.flags.sum())

    @property
    def indices(self):
        return np.flatnonzero(self.flags)

    def to_json(self):
        payload = {
            "tokens": int(self.flags.shape[0]),
            "flagged": [int(i) for i in self.indices],
            "tau_rel": self.tau_rel,
            "tau_abs": self.tau_abs,
            "median_linf": self.median_linf,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text):
        try:
            payload = json.loads(text)
            tokens = int(payload["tokens"])
            flagged = payload["flagged"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed mask JSON: {exc}") from exc
        flags = np.zeros(tokens, dtype=bool)
        for i in flagged:
            if not 0 <= int(i) < tokens:
                raise DataError(f"flagged index {i} out of range for {tokens} tokens")
            flags[int(i)] = True
        return cls(
            flags=flags,
            tau_rel=payload.get("tau_rel"),
            tau_abs=payload.get("tau_abs"),
            linf=None,
            median_linf=float(payload.get("median_linf", 0.0)),
        )


def coerce_flags(mask):
    """Boolean flag vector from a MassiveMask or raw array.

    Raw numpy arrays must short-circuit the duck typing: ndarray.flags is
    the memory-layout descriptor, not token flags.
    """
    if isinstance(mask, np.ndarray):
        return np.asarray(mask, dtype=bool)
    return np.asarray(getattr(mask, "flags", mask), dtype=bool)


def detect_massive(x, tau_rel=15.0, tau_abs=None):
    """Flag tokens whose l-inf norm is >= tau_rel * median (and >= tau_abs)."""
    if tau_rel <= 1.0:
        raise ValueError(f"tau_rel must exceed 1, got {tau_rel}")
    arr = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a (tokens, channels) matrix, got ndim {arr.ndim}")
    linf = np.abs(arr).max(axis=1)
    median = float(np.median(linf))
    flags = linf >= tau_rel * median
    if tau_abs is not None:
        flags &= linf >= tau_abs
    return MassiveMask(
        flags=flags,
        tau_rel=float(tau_rel),
        tau_abs=None if tau_abs is None else float(tau_abs),
        linf=linf,
        median_linf=median,
    )


def ground_truth_mask(x, indices):
    """Mask for generator-injected massive tokens (no detection rule)."""
    arr = np.asarray(getattr(x, "values", x), dtype=np.float64)
    flags = np.zeros(arr.shape[0], dtype=bool)
    flags[np.asarray(indices, dtype=int)] = True
    linf = np.abs(arr).max(axis=1)
    return MassiveMask(
        flags=flags,
        tau_rel=None,
        tau_abs=None,
        linf=linf,
        median_linf=float(np.median(linf)),
    )
