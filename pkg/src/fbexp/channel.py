"""The AWGN forward link, the noiseless feedback pipe and per-trial transcripts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import InvalidParameterError

# channel uses where the transmitter is idle carry exactly this value
SILENT = 0.0


class GaussianNoise:
    """I.i.d. N(0, 1) variates from a seeded generator.

    ``position`` counts the variates emitted so far.
    """

    def __init__(self, seed=None, *, rng: np.random.Generator | None = None):
        self.seed = seed
        self._rng = rng if rng is not None else np.random.default_rng(seed)
        self.position = 0

    def draw(self, shape) -> np.ndarray:
        z = self._rng.standard_normal(shape)
        self.position += z.size
        return z


class ZeroNoise:
    """Noiseless stub for tests: every variate is 0."""

    position = 0

    def draw(self, shape) -> np.ndarray:
        return np.zeros(shape)


class FixedNoise:
    """Replays a prescribed noise realization (stub for adversarial tests).

    ``values`` must broadcast to every requested shape, e.g. one length-n row
    reused for each trial of a batch.
    """

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        self.position = 0

    def draw(self, shape) -> np.ndarray:
        return np.broadcast_to(self.values, shape).copy()


def transmit(x, noise) -> np.ndarray:
    """``y = x + z`` with ``z`` drawn from ``noise`` (a source or an explicit array)."""
    x = np.asarray(x, dtype=np.float64)
    z = noise.draw(x.shape) if hasattr(noise, "draw") else np.asarray(noise, dtype=np.float64)
    if z.shape != x.shape:
        raise InvalidParameterError(f"noise shape {z.shape} does not match input shape {x.shape}")
    return x + z


class FeedbackSymbol(NamedTuple):
    time: int
    """1-based channel use after which the symbol is sent."""
    symbol: int
    alphabet: int


@dataclass(frozen=True)
class Transcript:
    """Everything that crossed either link in one trial.

    Times in ``feedback_symbols`` and ``events`` are 1-based channel uses.
    """

    message: int
    inputs: tuple[float, ...]
    outputs: tuple[float, ...]
    feedback_symbols: tuple[FeedbackSymbol, ...]
    decoded: int
    events: tuple[dict, ...] = ()
    variant: str = ""
    config: dict = field(default_factory=dict)
    master_seed: int | None = None
    trial: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise InvalidParameterError("inputs and outputs must have equal length")
        for fb in self.feedback_symbols:
            if not 0 <= fb.symbol < fb.alphabet:
                raise InvalidParameterError(f"feedback symbol {fb} outside its alphabet")

    @property
    def n(self) -> int:
        return len(self.inputs)

    def to_json(self) -> str:
        record = {
            "variant": self.variant,
            "master_seed": self.master_seed,
            "trial": self.trial,
            "message": self.message,
            "decoded": self.decoded,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "feedback_symbols": [list(fb) for fb in self.feedback_symbols],
            "events": list(self.events),
            "config": self.config,
            "extras": self.extras,
        }
        return json.dumps(record, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Transcript":
        rec: dict[str, Any] = json.loads(line)
        return cls(
            message=rec["message"],
            inputs=tuple(rec["inputs"]),
            outputs=tuple(rec["outputs"]),
            feedback_symbols=tuple(FeedbackSymbol(*fb) for fb in rec["feedback_symbols"]),
            decoded=rec["decoded"],
            events=tuple(rec["events"]),
            variant=rec["variant"],
            config=rec["config"],
            master_seed=rec["master_seed"],
            trial=rec["trial"],
            extras=rec["extras"],
        )


def power_usage(t: Transcript) -> float:
    """Average energy per channel use, ``sum(x_i^2) / n``."""
    x = np.asarray(t.inputs, dtype=np.float64)
    return float(np.dot(x, x) / x.size)


def feedback_usage(t: Transcript) -> tuple[float, float]:
    """Feedback spent in nats: (block total, largest single use)."""
    if not t.feedback_symbols:
        return 0.0, 0.0
    nats = [math.log(fb.alphabet) for fb in t.feedback_symbols]
    return math.fsum(nats), max(nats)
