"""Experiment configuration and its flat ``key = value`` text format.

Recognised keys (one per line, ``#`` starts a comment)::

    variant       NO_FEEDBACK | TWO_PHASE | MULTI_PHASE | COMPRESSED_FB | BLOCK_MARKOV
    n             blocklength (channel uses)
    num_messages  |M|; alternatively give R and |M| = ceil(exp(n R))
    R             forward rate in nats/use (only used when num_messages is absent)
    P             average power (noise variance is 1)
    R_FB          feedback rate in nats/use; default is the smallest value the
                  variant needs (not defined for BLOCK_MARKOV)
    epsilon       retransmission share of the block (or of each sub-block)
    gamma         retransmission-trigger probability, or ``pilot``
    gammas        MULTI_PHASE boost ladder, comma separated, or ``pilot``
    L             MULTI_PHASE exponential order (number of sub-blocks)
    k             BLOCK_MARKOV sub-block count
    num_bins      COMPRESSED_FB feedback alphabet size b
    partition     COMPRESSED_FB binning: ``per-trial`` (fresh each trial) or ``fixed``
    codebook      ``gaussian`` or ``antipodal`` (|M| = 2 only)
    seed          seed for codebooks, fixed partitions and pilots
    pilot_trials  Monte Carlo budget of the pilot estimates
    safety        multiplier applied to pilot error rates

A value written as ``[a, b, c]`` (or ``[start:stop:step]``) marks the key as
swept; see :func:`parse_sweep`.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

from ..codec import num_messages_for_rate
from ..errors import InvalidParameterError

PILOT = "pilot"


class Variant(str, enum.Enum):
    NO_FEEDBACK = "NO_FEEDBACK"
    TWO_PHASE = "TWO_PHASE"
    MULTI_PHASE = "MULTI_PHASE"
    COMPRESSED_FB = "COMPRESSED_FB"
    BLOCK_MARKOV = "BLOCK_MARKOV"


def _ceil(x: float) -> int:
    # 0.1 * 30 == 3.0000000000000004 must give 3
    return math.ceil(round(x, 9))


def per_use_alphabet(R_FB: float) -> int:
    """Largest feedback alphabet allowed per use, ``floor(exp(R_FB))``."""
    return int(math.floor(math.exp(R_FB) * (1.0 + 1e-12)))


def choose_subblock_count(delta_prime: float) -> int:
    """Smallest integer k with ``delta'/2 <= 1/k < delta'``."""
    if not 0 < delta_prime <= 1:
        raise InvalidParameterError(f"delta' must lie in (0, 1], got {delta_prime!r}")
    k = math.floor(1.0 / delta_prime) + 1
    if not (delta_prime / 2 <= 1.0 / k < delta_prime):
        raise InvalidParameterError(f"no admissible k for delta'={delta_prime!r}")
    return k


def subblock_rate(R: float, k: int) -> float:
    """Forward rate inside each carrying sub-block, ``k R / (k - 1)``."""
    return k * R / (k - 1)


@dataclass(frozen=True)
class SchemeConfig:
    variant: Variant
    n: int
    num_messages: int
    P: float
    R_FB: float | None = None
    epsilon: float = 0.1
    gamma: float | str | None = None
    gammas: tuple[float, ...] | str | None = None
    L: int = 2
    k: int | None = None
    num_bins: int | None = None
    partition: str = "per-trial"
    codebook: str = "gaussian"
    seed: int = 0
    pilot_trials: int = 100_000
    safety: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if isinstance(self.gammas, list):
            object.__setattr__(self, "gammas", tuple(self.gammas))

    # ---- derived quantities -------------------------------------------------

    @property
    def rate(self) -> float:
        return math.log(self.num_messages) / self.n

    @property
    def feedback_rate(self) -> float:
        """Configured R_FB, or the least the variant needs when unset."""
        if self.R_FB is not None:
            return float(self.R_FB)
        v = self.variant
        if v is Variant.NO_FEEDBACK:
            return 0.0
        if v is Variant.TWO_PHASE:
            return self.rate
        if v is Variant.MULTI_PHASE:
            return (self.L - 1) * self.rate
        if v is Variant.COMPRESSED_FB:
            return math.log(self.num_bins) / self.n if self.num_bins else 0.0
        raise InvalidParameterError("BLOCK_MARKOV needs an explicit R_FB")

    @property
    def two_phase_split(self) -> tuple[int, int]:
        """(n1, n2): initial codeword length and retransmission codeword length."""
        n2 = _ceil(self.epsilon * self.n)
        return self.n - n2 - 1, n2

    @property
    def multi_phase_split(self) -> tuple[int, int]:
        """(n1, r): initial length and codeword length of each of the L-1 rounds.

        Each round occupies ``r + 1`` uses (alarm slot then codeword); with
        L = 2 this coincides with :attr:`two_phase_split`.
        """
        rounds = self.L - 1
        r = _ceil(self.epsilon * self.n / rounds)
        return self.n - rounds * (r + 1), r

    @property
    def subblock_split(self) -> tuple[int, int, int]:
        """(l, l1, l2) for BLOCK_MARKOV: sub-block length, payload part, retransmission part."""
        l = self.n // self.k
        l2 = _ceil(self.epsilon * l)
        return l, l - l2 - 1, l2

    @property
    def payload_bits(self) -> int:
        return self.num_messages.bit_length() - 1

    @property
    def chunk_bits(self) -> tuple[int, ...]:
        """Bits per BLOCK_MARKOV chunk; earlier chunks take the ceiling."""
        q, extra = divmod(self.payload_bits, self.k - 1)
        return tuple(q + 1 if j < extra else q for j in range(self.k - 1))

    @property
    def ladder(self) -> tuple[float, ...]:
        """Per-round boost gammas: ``(gamma,)`` or the MULTI_PHASE ``gammas``."""
        if self.variant is Variant.MULTI_PHASE:
            return tuple(self.gammas or ())
        return (self.gamma,)

    def round_powers(self) -> tuple[float, ...]:
        """Power of each retransmission round: ``P / prod(gammas[:i+1])``."""
        powers, cumulative = [], 1.0
        for g in self.ladder:
            cumulative *= g
            powers.append(self.P / cumulative)
        return tuple(powers)

    def alarm_threshold(self, round_index: int = 0) -> float:
        """Receiver threshold ``sqrt(P_round) / 2`` for the alarm of a round."""
        return math.sqrt(self.round_powers()[round_index]) / 2.0

    @property
    def needs_pilot(self) -> bool:
        return self.gamma == PILOT or self.gammas == PILOT

    # ---- validation -----------------------------------------------------------

    def validate(self) -> "SchemeConfig":
        """Raise :class:`InvalidParameterError` naming the first violated constraint."""
        v = self.variant
        if self.n < 1:
            raise InvalidParameterError(f"blocklength n must be >= 1, got {self.n}")
        if self.num_messages < 1:
            raise InvalidParameterError(f"num_messages must be >= 1, got {self.num_messages}")
        if not (self.P > 0 and math.isfinite(self.P)):
            raise InvalidParameterError(f"power P must be positive, got {self.P!r}")
        if self.R_FB is not None and not self.R_FB >= 0:
            raise InvalidParameterError(f"R_FB must be >= 0, got {self.R_FB!r}")
        if self.codebook not in ("gaussian", "antipodal"):
            raise InvalidParameterError(f"unknown codebook kind {self.codebook!r}")
        if self.codebook == "antipodal" and self.num_messages != 2:
            raise InvalidParameterError("antipodal codebook requires num_messages = 2")
        if v is Variant.NO_FEEDBACK:
            return self
        if self.needs_pilot:
            raise InvalidParameterError("gamma is still 'pilot'; resolve the config first")
        if not 0 < self.epsilon < 1:
            raise InvalidParameterError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        for g in self.ladder:
            if g is None or not 0 < g < 1:
                raise InvalidParameterError(
                    f"gamma must lie in (0, 1) so boost powers strictly increase, got {g!r}"
                )
        budget = self.n * self.feedback_rate + 1e-9

        if v in (Variant.TWO_PHASE, Variant.COMPRESSED_FB):
            n1, n2 = self.two_phase_split
            if n1 < 1 or n2 < 1:
                raise InvalidParameterError(
                    f"phase split needs n1 >= 1 and n2 >= 1, got n1={n1}, n2={n2}"
                )
        if v is Variant.TWO_PHASE and math.log(self.num_messages) > budget:
            raise InvalidParameterError(
                f"feedback budget: log|M| = {math.log(self.num_messages):.6g} nats exceeds "
                f"n*R_FB = {self.n * self.feedback_rate:.6g}"
            )
        if v is Variant.COMPRESSED_FB:
            b = self.num_bins
            if not b or b < 1 or self.num_messages % b:
                raise InvalidParameterError(
                    f"num_bins={b!r} must divide num_messages={self.num_messages}"
                )
            if math.log(b) > budget:
                raise InvalidParameterError(
                    f"feedback budget: log(num_bins) = {math.log(b):.6g} nats exceeds "
                    f"n*R_FB = {self.n * self.feedback_rate:.6g}"
                )
            if self.partition not in ("per-trial", "fixed"):
                raise InvalidParameterError(f"unknown partition mode {self.partition!r}")
        if v is Variant.MULTI_PHASE:
            if self.L < 2:
                raise InvalidParameterError(f"L must be >= 2, got {self.L}")
            if len(self.ladder) != self.L - 1:
                raise InvalidParameterError(
                    f"gammas must list L-1 = {self.L - 1} values, got {len(self.ladder)}"
                )
            n1, r = self.multi_phase_split
            if r + 1 < 2 or n1 < 1:
                raise InvalidParameterError(
                    f"sub-block too short: initial length {n1}, round length {r + 1} (need >= 2)"
                )
            need = (self.L - 1) * math.log(self.num_messages)
            if need > budget:
                raise InvalidParameterError(
                    f"feedback budget: (L-1)*log|M| = {need:.6g} nats exceeds "
                    f"n*R_FB = {self.n * self.feedback_rate:.6g}"
                )
        if v is Variant.BLOCK_MARKOV:
            self._validate_block_markov()
        return self

    def _validate_block_markov(self):
        if self.k is None or self.k < 2:
            raise InvalidParameterError(f"BLOCK_MARKOV needs k >= 2, got {self.k!r}")
        if self.n % self.k:
            raise InvalidParameterError(f"k={self.k} must divide n={self.n}")
        if self.R_FB is None:
            raise InvalidParameterError("BLOCK_MARKOV needs an explicit R_FB")
        M = self.num_messages
        if M < 2 or M & (M - 1):
            raise InvalidParameterError(f"BLOCK_MARKOV needs num_messages = 2^bits, got {M}")
        if self.payload_bits < self.k - 1:
            raise InvalidParameterError(
                f"payload of {self.payload_bits} bits cannot fill k-1 = {self.k - 1} chunks"
            )
        l, l1, l2 = self.subblock_split
        if l1 < 1 or l2 < 1:
            raise InvalidParameterError(
                f"sub-block split needs l1 >= 1 and l2 >= 1, got l1={l1}, l2={l2}"
            )
        base = per_use_alphabet(self.R_FB)
        need = max(self.chunk_bits) * math.log(2)
        have = l1 * math.log(base) if base >= 2 else 0.0
        if base < 2 or have + 1e-12 < need:
            raise InvalidParameterError(
                f"feedback capacity: l1*log(floor(exp(R_FB))) = {l1}*log({base}) = {have:.6g} "
                f"nats < log|M_j| = {need:.6g} nats per chunk"
            )

    # ---- serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, Variant):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SchemeConfig":
        data = dict(data)
        if "num_messages" not in data and "R" in data:
            data["num_messages"] = num_messages_for_rate(int(data["n"]), float(data["R"]))
        data.pop("R", None)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "SchemeConfig":
        return dataclasses.replace(self, **changes)


_INT_KEYS = {"n", "num_messages", "L", "k", "num_bins", "seed", "pilot_trials"}
_FLOAT_KEYS = {"P", "R", "R_FB", "epsilon", "safety"}
_KEY_ORDER = [f.name for f in dataclasses.fields(SchemeConfig)]


def _convert(key: str, text: str):
    text = text.strip()
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key == "gamma":
            return PILOT if text == PILOT else float(text)
        if key == "gammas":
            if text == PILOT:
                return PILOT
            return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise InvalidParameterError(f"bad value for {key}: {text!r}") from exc
    if key == "variant":
        try:
            return Variant(text.upper())
        except ValueError as exc:
            raise InvalidParameterError(f"unknown variant {text!r}") from exc
    return text


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        yield lineno, key, value


def parse_config(text: str) -> SchemeConfig:
    data = {}
    for lineno, key, value in _lines(text):
        if value.startswith("["):
            raise InvalidParameterError(f"line {lineno}: swept value for {key} outside a sweep")
        data[key] = _convert(key, value)
    if "variant" not in data:
        raise InvalidParameterError("config is missing 'variant'")
    return SchemeConfig.from_dict(data)


def _format(value) -> str:
    if isinstance(value, Variant):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def emit_config(cfg: SchemeConfig) -> str:
    lines = []
    for key in _KEY_ORDER:
        value = getattr(cfg, key)
        if value is not None:
            lines.append(f"{key} = {_format(value)}")
    return "\n".join(lines) + "\n"


def _expand_grid(key: str, body: str) -> list:
    body = body.strip()
    if not body:
        return []
    if ":" in body:
        parts = body.split(":")
        if len(parts) != 3:
            raise InvalidParameterError(f"range grid must be start:stop:step, got {body!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise InvalidParameterError(f"invalid range grid {body!r}")
        count = int(round((stop - start) / step)) + 1
        values = [start + i * step for i in range(count)]
        if key in _INT_KEYS:
            values = [int(round(v)) for v in values]
        return values
    # gammas lists are comma separated themselves, so sweep alternatives use ';'
    sep = ";" if key == "gammas" else ","
    return [_convert(key, item) for item in body.split(sep) if item.strip()]


def parse_sweep(text: str) -> tuple[str, list, dict]:
    """Split a sweep config into (swept key, grid values, base key/value dict)."""
    base, swept = {}, []
    for lineno, key, value in _lines(text):
        if value.startswith("["):
            if not value.endswith("]"):
                raise InvalidParameterError(f"line {lineno}: unterminated grid for {key}")
            swept.append((key, _expand_grid(key, value[1:-1])))
        else:
            base[key] = _convert(key, value)
    if len(swept) != 1:
        raise InvalidParameterError(
            f"a sweep needs exactly one swept key, found {len(swept)}: {[k for k, _ in swept]}"
        )
    key, grid = swept[0]
    if not grid:
        raise InvalidParameterError(f"empty grid for swept key {key}")
    if "variant" not in base:
        raise InvalidParameterError("config is missing 'variant'")
    return key, grid, base
