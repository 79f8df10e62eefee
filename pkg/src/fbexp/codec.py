"""Random Gaussian codebooks and exact nearest-neighbour (ML) decoding."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .streams import derive_rng

# Rows whose best and runner-up Gram-form distances are this close (relative)
# are re-scored with explicit squared distances.
_TIE_RTOL = 1e-9
_DECODE_BLOCK_ELEMS = 1 << 22


def q_function(x):
    """Standard normal tail probability ``Pr{N(0,1) >= x}``."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    flat = [0.5 * math.erfc(v / math.sqrt(2.0)) for v in np.ravel(x).tolist()]
    return np.asarray(flat).reshape(np.shape(x))


def num_messages_for_rate(blocklength: int, rate: float) -> int:
    """Smallest integer ``|M| >= exp(n R)``."""
    target = math.exp(blocklength * rate)
    # e.g. exp(30 * log(16) / 30) evaluates to 16.000000000000004
    return max(1, math.ceil(target * (1.0 - 1e-12)))


@dataclass(frozen=True, eq=False)
class Codebook:
    """Immutable set of real codewords, one row per message.

    Every codeword sits on the sphere of squared radius ``blocklength * power``.
    """

    codewords: np.ndarray
    power: float
    seed: int | None = None
    label: str = ""
    norms_sq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cw = np.array(self.codewords, dtype=np.float64)
        if cw.ndim != 2 or cw.shape[0] < 1 or cw.shape[1] < 1:
            raise InvalidParameterError(f"codewords must be a non-empty 2-D array, got shape {cw.shape}")
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)
        norms = np.einsum("ij,ij->i", cw, cw)
        norms.setflags(write=False)
        object.__setattr__(self, "norms_sq", norms)

    @property
    def num_messages(self) -> int:
        return self.codewords.shape[0]

    @property
    def blocklength(self) -> int:
        return self.codewords.shape[1]

    @property
    def rate(self) -> float:
        return math.log(self.num_messages) / self.blocklength

    def __getitem__(self, m):
        return self.codewords[m]

    def encode(self, messages) -> np.ndarray:
        return self.codewords[np.asarray(messages)]

    def decode(self, y) -> np.ndarray | int:
        return ml_decode(self, y)

    def to_csv(self, path) -> None:
        """Debug dump: one row per message, ``index, x_1, ..., x_n``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["message"] + [f"x{i + 1}" for i in range(self.blocklength)])
            for m, row in enumerate(self.codewords):
                writer.writerow([m] + [repr(float(v)) for v in row])


def generate_codebook(num_messages: int, blocklength: int, power: float, seed: int,
                      label: str = "codebook") -> Codebook:
    """I.i.d. Gaussian codewords rescaled onto the power sphere.

    The stream is derived from ``(seed, "codebook", label)`` so codebooks never
    share randomness with noise or with each other.
    """
    if int(num_messages) < 1 or int(blocklength) < 1:
        raise InvalidParameterError(
            f"num_messages and blocklength must be >= 1, got {num_messages}, {blocklength}"
        )
    if not (power > 0 and math.isfinite(power)):
        raise InvalidParameterError(f"power must be positive and finite, got {power!r}")
    rng = derive_rng(seed, "codebook", label)
    raw = rng.standard_normal((int(num_messages), int(blocklength)))
    norms = np.sqrt(np.einsum("ij,ij->i", raw, raw))
    cw = raw * (math.sqrt(blocklength * power) / norms)[:, None]
    return Codebook(cw, float(power), seed=seed, label=label)


def antipodal_codebook(blocklength: int, power: float) -> Codebook:
    """Two-message code ``{+sqrt(P) * 1, -sqrt(P) * 1}``."""
    if int(blocklength) < 1 or not power > 0:
        raise InvalidParameterError("antipodal code needs blocklength >= 1 and power > 0")
    x = np.full(int(blocklength), math.sqrt(power))
    return Codebook(np.stack([x, -x]), float(power), label="antipodal")


def _direct_distances(codewords, y):
    diff = y[:, None, :] - codewords[None, :, :]
    return np.einsum("bmn,bmn->bm", diff, diff)


def ml_decode(codebook: Codebook, y):
    """Nearest-neighbour decision; ties go to the smallest message index.

    Accepts one received vector (returns an int) or a ``(batch, n)`` array
    (returns an int array).
    """
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    if single:
        y = y[None, :]
    if y.ndim != 2 or y.shape[1] != codebook.blocklength:
        raise InvalidParameterError(
            f"received length {y.shape[-1]} does not match blocklength {codebook.blocklength}"
        )
    M = codebook.num_messages
    if M == 1:
        out = np.zeros(y.shape[0], dtype=np.int64)
        return int(out[0]) if single else out

    cw = codebook.codewords
    out = np.empty(y.shape[0], dtype=np.int64)
    step = max(1, _DECODE_BLOCK_ELEMS // (M * max(1, codebook.blocklength)))
    for start in range(0, y.shape[0], step):
        yb = y[start:start + step]
        # ||y||^2 is common to every candidate, so it is dropped
        scores = codebook.norms_sq[None, :] - 2.0 * (yb @ cw.T)
        best = np.argmin(scores, axis=1)
        part = np.partition(scores, 1, axis=1)[:, :2]
        scale = np.einsum("ij,ij->i", yb, yb) + codebook.norms_sq.max()
        close = (part[:, 1] - part[:, 0]) <= _TIE_RTOL * scale
        if close.any():
            best[close] = np.argmin(_direct_distances(cw, yb[close]), axis=1)
        out[start:start + step] = best
    return int(out[0]) if single else out


def pairwise_union_bound(codebook: Codebook) -> float:
    """``max_m sum_{m' != m} Q(||x(m) - x(m')|| / 2)`` under unit-variance noise."""
    if codebook.num_messages < 2:
        raise InvalidParameterError("union bound needs at least two codewords")
    cw = codebook.codewords
    dist = np.sqrt(np.maximum(_direct_distances(cw, cw), 0.0))
    tails = q_function(dist / 2.0)
    np.fill_diagonal(tails, 0.0)
    return float(tails.sum(axis=1).max())
