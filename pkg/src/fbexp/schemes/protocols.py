"""Executable feedback coding schemes.

Every scheme runs a whole batch of trials at once but is written as a
time-ordered sequence of transmitter and receiver steps: the transmitter only
reads the message and feedback already delivered, and the receiver only reads
channel outputs already received. The receiver steps are methods that
:meth:`Scheme.receive` can replay from stored outputs alone.

Schedule of the retransmission family (TWO_PHASE is the L = 2 case)::

    | initial codeword (n1) | alarm, round codeword (r) | ... L-1 rounds ... |

and of BLOCK_MARKOV, per sub-block of length l::

    | payload chunk j / feedback of chunk j-1 (l1) | alarm (1) | retransmission of j-1 (l2) |
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import FeedbackSymbol, Transcript
from ..codec import Codebook, antipodal_codebook, generate_codebook
from ..errors import InvalidParameterError
from .config import SchemeConfig, Variant, per_use_alphabet
from .partition import PartitionMap


class EventClass(enum.IntEnum):
    OK = 0
    FALSE_NEGATIVE = 1
    """Initial decision right, alarm falsely detected, final decision wrong."""
    FALSE_POSITIVE = 2
    """Initial decision wrong, alarm sent but missed."""
    WRONG_DECODING = 3
    """Alarm detected, retransmission decoded wrongly (or a plain no-feedback error)."""
    ERROR_MISDETECTION = 4
    """Initial decision wrong but in the true message's feedback bin."""
    SUBBLOCK_ERROR = 5
    """Some BLOCK_MARKOV chunk decoded wrongly."""


@dataclass(frozen=True)
class TrialOutcome:
    transcript: Transcript
    final_correct: bool
    event_class: EventClass
    branch_flags: dict = field(default_factory=dict)
    subblock: int | None = None
    """1-based index of the first failing chunk for SUBBLOCK_ERROR."""


@dataclass
class BatchResult:
    """Per-trial arrays for a batch; row ``i`` is one trial."""

    scheme: "Scheme"
    messages: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    decoded: np.ndarray
    event_class: np.ndarray
    flags: dict
    fb_times: np.ndarray
    fb_alphabets: np.ndarray
    fb_symbols: np.ndarray
    details: dict = field(default_factory=dict)
    partitions: np.ndarray | None = None
    subblock: np.ndarray | None = None

    def __len__(self):
        return self.messages.shape[0]

    @property
    def energy(self) -> np.ndarray:
        """Average power of each trial, ``sum(x^2) / n``."""
        return np.einsum("ij,ij->i", self.inputs, self.inputs) / self.inputs.shape[1]

    @property
    def feedback_nats(self) -> tuple[float, float]:
        """(total, per-use maximum) feedback nats; identical for every trial."""
        if self.fb_alphabets.size == 0:
            return 0.0, 0.0
        nats = np.log(self.fb_alphabets.astype(np.float64))
        return math.fsum(nats.tolist()), float(nats.max())

    def outcome(self, i: int, *, master_seed=None, trial=None) -> TrialOutcome:
        scheme = self.scheme
        extras = {}
        if self.partitions is not None:
            extras["partition"] = self.partitions[i].tolist()
        transcript = Transcript(
            message=int(self.messages[i]),
            inputs=tuple(self.inputs[i].tolist()),
            outputs=tuple(self.outputs[i].tolist()),
            feedback_symbols=tuple(
                FeedbackSymbol(int(t), int(s), int(a))
                for t, s, a in zip(self.fb_times, self.fb_symbols[i], self.fb_alphabets)
            ),
            decoded=int(self.decoded[i]),
            events=tuple(scheme.events(self, i)),
            variant=scheme.cfg.variant.value,
            config=scheme.cfg.to_dict(),
            master_seed=master_seed,
            trial=trial,
            extras=extras,
        )
        flags = {}
        for key, arr in self.flags.items():
            value = arr[i]
            flags[key] = value.tolist() if np.ndim(value) else bool(value)
        sub = None
        if self.subblock is not None and self.subblock[i] > 0:
            sub = int(self.subblock[i])
        return TrialOutcome(
            transcript=transcript,
            final_correct=bool(self.decoded[i] == self.messages[i]),
            event_class=EventClass(int(self.event_class[i])),
            branch_flags=flags,
            subblock=sub,
        )


def build_codebooks(cfg: SchemeConfig) -> dict[str, Codebook]:
    """All codebooks a scheme needs, derived from ``cfg.seed`` and a per-codebook label."""
    cfg.validate()
    M, P, seed = cfg.num_messages, cfg.P, cfg.seed
    antipodal = cfg.codebook == "antipodal"

    def make(label, length, size, power):
        if antipodal:
            return antipodal_codebook(length, power)
        return generate_codebook(size, length, power, seed, label)

    v = cfg.variant
    if v is Variant.NO_FEEDBACK:
        return {"C": make("main", cfg.n, M, P)}
    if v is Variant.BLOCK_MARKOV:
        l, l1, l2 = cfg.subblock_split
        books = {}
        for s in sorted(set(cfg.chunk_bits)):
            books[f"BM1-{s}"] = make(f"BM1-{s}", l1, 1 << s, P)
            books[f"BM2-{s}"] = make(f"BM2-{s}", l2, 1 << s, P / cfg.gamma)
        return books
    n1, r = cfg.multi_phase_split if v is Variant.MULTI_PHASE else cfg.two_phase_split
    books = {"C1": make("C1", n1, M, P)}
    for i, power in enumerate(cfg.round_powers()):
        books[f"C{i + 2}"] = make(f"C{i + 2}", r, M, power)
    return books


class Scheme:
    """Common surface: ``run_batch`` simulates, ``receive`` replays the receiver."""

    def __init__(self, cfg: SchemeConfig, books: dict[str, Codebook] | None = None):
        self.cfg = cfg.validate()
        self.books = books if books is not None else build_codebooks(cfg)

    @property
    def n(self) -> int:
        return self.cfg.n

    def _empty_feedback(self, batch):
        return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                np.zeros((batch, 0), dtype=np.int64))

    def _check_batch(self, messages, noise):
        messages = np.asarray(messages, dtype=np.int64)
        noise = np.asarray(noise, dtype=np.float64)
        if messages.ndim != 1 or noise.shape != (messages.size, self.n):
            raise InvalidParameterError(
                f"batch shapes disagree: messages {messages.shape}, noise {noise.shape}, n={self.n}"
            )
        if messages.size and (messages.min() < 0 or messages.max() >= self.cfg.num_messages):
            raise InvalidParameterError("message index out of range")
        return messages, noise

    def run_batch(self, messages, noise, partitions=None) -> BatchResult:
        raise NotImplementedError

    def receive(self, outputs, partitions=None) -> dict:
        raise NotImplementedError

    def events(self, result: BatchResult, i: int) -> list[dict]:
        return []


class NoFeedbackScheme(Scheme):
    def run_batch(self, messages, noise, partitions=None) -> BatchResult:
        messages, noise = self._check_batch(messages, noise)
        book = self.books["C"]
        x = book.encode(messages)
        y = x + noise
        decoded = self.receive(y)["decoded"]
        correct = decoded == messages
        cls = np.where(correct, EventClass.OK, EventClass.WRONG_DECODING).astype(np.int64)
        times, alph, sym = self._empty_feedback(messages.size)
        return BatchResult(self, messages, x, y, decoded, cls, {"initial_correct": correct},
                           times, alph, sym)

    def receive(self, outputs, partitions=None) -> dict:
        y = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        return {"decoded": self.books["C"].decode(y), "fb_symbols": np.zeros((y.shape[0], 0), np.int64)}


class RetransmissionScheme(Scheme):
    """Initial codeword, then L-1 rounds of feedback / alarm / boosted retransmission.

    TWO_PHASE is L = 2 with full feedback of the initial decision; COMPRESSED_FB
    is L = 2 with the decision compressed to its bin index; MULTI_PHASE allows
    L >= 2 with boost ladder ``cfg.gammas``.
    """

    def __init__(self, cfg, books=None, partition: PartitionMap | None = None):
        super().__init__(cfg, books)
        v = cfg.variant
        if v not in (Variant.TWO_PHASE, Variant.MULTI_PHASE, Variant.COMPRESSED_FB):
            raise InvalidParameterError(f"{v.value} is not a retransmission scheme")
        self.compressed = v is Variant.COMPRESSED_FB
        self.partition = partition
        if v is Variant.MULTI_PHASE:
            self.n1, self.r = cfg.multi_phase_split
        else:
            self.n1, self.r = cfg.two_phase_split
        self.rounds = len(cfg.ladder)
        self.powers = cfg.round_powers()
        self.amplitudes = [math.sqrt(p) for p in self.powers]
        self.thresholds = [a / 2.0 for a in self.amplitudes]

    def round_start(self, i: int) -> int:
        """0-based index of the alarm slot of round i (0-based)."""
        return self.n1 + i * (self.r + 1)

    # ---- receiver steps (outputs only) --------------------------------------

    def _initial_decision(self, y):
        return self.books["C1"].decode(y[:, :self.n1])

    def _round_decision(self, i, y, estimate):
        s = self.round_start(i)
        alarm = y[:, s] >= self.thresholds[i]
        decoded = self.books[f"C{i + 2}"].decode(y[:, s + 1:s + 1 + self.r])
        return alarm, decoded, np.where(alarm, decoded, estimate)

    def _feedback_symbol(self, estimate, partitions):
        if not self.compressed:
            return estimate
        return partitions[np.arange(estimate.size), estimate]

    def _feedback_schedule(self):
        """1-based times and alphabet sizes of the feedback symbols."""
        if self.compressed:
            return np.array([self.n1]), np.array([self.cfg.num_bins])
        times = [self.n1] + [self.round_start(i) + self.r + 1 for i in range(self.rounds - 1)]
        return np.array(times), np.full(len(times), self.cfg.num_messages)

    def _partitions(self, batch, partitions):
        if not self.compressed:
            return None
        if partitions is None:
            partitions = self.partition
        if partitions is None:
            raise InvalidParameterError("COMPRESSED_FB needs a partition")
        if isinstance(partitions, PartitionMap):
            partitions = partitions.assignment
        partitions = np.asarray(partitions, dtype=np.int64)
        if partitions.ndim == 1:
            partitions = np.broadcast_to(partitions, (batch, partitions.size))
        if partitions.shape != (batch, self.cfg.num_messages):
            raise InvalidParameterError(f"partition shape {partitions.shape} does not match batch")
        return partitions

    def receive(self, outputs, partitions=None) -> dict:
        y = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        parts = self._partitions(y.shape[0], partitions)
        estimate = self._initial_decision(y)
        symbols = [self._feedback_symbol(estimate, parts)]
        alarms = []
        for i in range(self.rounds):
            alarm, _, estimate = self._round_decision(i, y, estimate)
            alarms.append(alarm)
            if i < self.rounds - 1:
                symbols.append(estimate)
        return {"decoded": estimate, "fb_symbols": np.stack(symbols, axis=1),
                "alarms": np.stack(alarms, axis=1)}

    # ---- full protocol -----------------------------------------------------------

    def run_batch(self, messages, noise, partitions=None) -> BatchResult:
        messages, noise = self._check_batch(messages, noise)
        B = messages.size
        parts = self._partitions(B, partitions)
        x = np.zeros((B, self.n))
        y = np.zeros((B, self.n))
        n1 = self.n1

        # initial transmission; receiver decodes and feeds back at time n1
        x[:, :n1] = self.books["C1"].encode(messages)
        y[:, :n1] = x[:, :n1] + noise[:, :n1]
        estimate = self._initial_decision(y)
        initial = estimate
        feedback = self._feedback_symbol(estimate, parts)
        own_image = self._feedback_symbol(messages, parts)
        symbols = [feedback]

        retx_rounds, alarm_rounds, decoded_rounds = [], [], []
        entering = estimate
        for i in range(self.rounds):
            s, e = self.round_start(i), self.round_start(i) + 1 + self.r
            # transmitter: act on the last feedback symbol only
            retx = feedback != own_image
            x[retx, s] = self.amplitudes[i]
            x[retx, s + 1:e] = self.books[f"C{i + 2}"].encode(messages[retx])
            y[:, s:e] = x[:, s:e] + noise[:, s:e]
            entering = estimate
            alarm, decoded, estimate = self._round_decision(i, y, estimate)
            retx_rounds.append(retx)
            alarm_rounds.append(alarm)
            decoded_rounds.append(decoded)
            if i < self.rounds - 1:
                feedback = estimate
                own_image = messages
                symbols.append(feedback)

        final = estimate
        initial_ok = initial == messages
        sent = retx_rounds[0]
        collision = ~initial_ok & ~sent
        last_alarm, last_retx = alarm_rounds[-1], retx_rounds[-1]
        cls = np.full(B, EventClass.WRONG_DECODING, dtype=np.int64)
        cls[(entering == messages) & ~collision] = EventClass.FALSE_NEGATIVE
        cls[(entering != messages) & last_retx & ~last_alarm] = EventClass.FALSE_POSITIVE
        cls[collision] = EventClass.ERROR_MISDETECTION
        cls[final == messages] = EventClass.OK

        flags = {
            "initial_correct": initial_ok,
            "alarm_sent": sent,
            "alarm_detected": alarm_rounds[0],
            "retx_correct": sent & (decoded_rounds[0] == messages),
            "bin_collision": collision,
        }
        times, alphabets = self._feedback_schedule()
        return BatchResult(
            self, messages, x, y, final, cls, flags, times, alphabets,
            np.stack(symbols, axis=1),
            details={
                "initial": initial,
                "retx": np.stack(retx_rounds, axis=1),
                "alarm": np.stack(alarm_rounds, axis=1),
                "round_decoded": np.stack(decoded_rounds, axis=1),
            },
            partitions=None if parts is None or not self.compressed else np.array(parts),
        )

    def events(self, result, i):
        d = result.details
        out = [{"event": "initial-decode", "time": self.n1, "value": int(d["initial"][i])}]
        for k in range(self.rounds):
            s = self.round_start(k) + 1  # 1-based alarm slot
            if d["retx"][i, k]:
                out.append({"event": "alarm-sent", "time": s, "round": k + 1,
                            "amplitude": self.amplitudes[k]})
            if d["alarm"][i, k]:
                out.append({"event": "alarm-detected", "time": s, "round": k + 1})
            if d["retx"][i, k]:
                out.append({"event": "retransmission", "start": s + 1, "end": s + self.r,
                            "round": k + 1, "power": self.powers[k]})
            if d["alarm"][i, k]:
                out.append({"event": "retransmission-decode", "time": s + self.r, "round": k + 1,
                            "value": int(d["round_decoded"][i, k])})
        return out


def _digits(values, base, width):
    """Base-``base`` digits of each value, most significant first."""
    v = np.asarray(values, dtype=np.int64).copy()
    out = np.empty((v.size, width), dtype=np.int64)
    for t in range(width - 1, -1, -1):
        out[:, t] = v % base
        v //= base
    return out


class BlockMarkovScheme(Scheme):
    """k sub-blocks; chunk j is sent in sub-block j and repaired in sub-block j+1.

    The decision on chunk j is fed back as ``l1`` base-``floor(exp(R_FB))``
    digits (most significant first) during the payload part of sub-block j+1,
    so no single feedback use exceeds R_FB nats.
    """

    def __init__(self, cfg, books=None):
        super().__init__(cfg, books)
        self.l, self.l1, self.l2 = cfg.subblock_split
        self.k = cfg.k
        self.base = per_use_alphabet(cfg.R_FB)
        self.bits = cfg.chunk_bits
        self.shifts = [sum(self.bits[j + 1:]) for j in range(len(self.bits))]
        self.amplitude = math.sqrt(cfg.P / cfg.gamma)
        self.threshold = self.amplitude / 2.0

    def chunks(self, messages):
        """Split messages into chunk values; chunk 1 holds the most significant bits."""
        m = np.asarray(messages, dtype=np.int64)
        return [(m >> sh) & ((1 << b) - 1) for sh, b in zip(self.shifts, self.bits)]

    def combine(self, chunks):
        total = np.zeros_like(chunks[0])
        for c, sh in zip(chunks, self.shifts):
            total |= c << sh
        return total

    def _books(self, j):
        s = self.bits[j]
        return self.books[f"BM1-{s}"], self.books[f"BM2-{s}"]

    def _feedback_schedule(self):
        times = [sb * self.l + t + 1 for sb in range(1, self.k) for t in range(self.l1)]
        return np.array(times), np.full(len(times), self.base)

    # ---- receiver steps ---------------------------------------------------------

    def _initial_decision(self, j, y):
        o = j * self.l
        return self._books(j)[0].decode(y[:, o:o + self.l1])

    def _repair_decision(self, j, y, initial):
        o = (j + 1) * self.l
        alarm = y[:, o + self.l1] >= self.threshold
        decoded = self._books(j)[1].decode(y[:, o + self.l1 + 1:o + self.l])
        return alarm, decoded, np.where(alarm, decoded, initial)

    def receive(self, outputs, partitions=None) -> dict:
        y = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        finals, symbols = [], []
        for j in range(self.k - 1):
            initial = self._initial_decision(j, y)
            symbols.append(_digits(initial, self.base, self.l1))
            finals.append(self._repair_decision(j, y, initial)[2])
        return {"decoded": self.combine(finals), "fb_symbols": np.concatenate(symbols, axis=1)}

    # ---- full protocol ----------------------------------------------------------

    def run_batch(self, messages, noise, partitions=None) -> BatchResult:
        messages, noise = self._check_batch(messages, noise)
        B = messages.size
        chunks = self.chunks(messages)
        x = np.zeros((B, self.n))
        y = np.zeros((B, self.n))
        nchunks = self.k - 1
        initial = [None] * nchunks
        final = [None] * nchunks
        symbols = []
        retx_all, alarm_all, dec_all = [], [], []
        l, l1 = self.l, self.l1
        for sb in range(self.k):
            o = sb * l
            # payload part: fresh chunk forward, digits of the previous decision backward
            if sb < nchunks:
                x[:, o:o + l1] = self._books(sb)[0].encode(chunks[sb])
            y[:, o:o + l1] = x[:, o:o + l1] + noise[:, o:o + l1]
            if sb < nchunks:
                initial[sb] = self._initial_decision(sb, y)
            if sb >= 1:
                j = sb - 1
                digits = _digits(initial[j], self.base, l1)
                symbols.append(digits)
                retx = np.any(digits != _digits(chunks[j], self.base, l1), axis=1)
                x[retx, o + l1] = self.amplitude
                x[retx, o + l1 + 1:o + l] = self._books(j)[1].encode(chunks[j][retx])
            y[:, o + l1:o + l] = x[:, o + l1:o + l] + noise[:, o + l1:o + l]
            if sb >= 1:
                alarm, decoded, final[j] = self._repair_decision(j, y, initial[j])
                retx_all.append(retx)
                alarm_all.append(alarm)
                dec_all.append(decoded)

        decoded_total = self.combine(final)
        wrong = np.stack([f != c for f, c in zip(final, chunks)], axis=1)
        subblock = np.where(wrong.any(axis=1), wrong.argmax(axis=1) + 1, 0)
        cls = np.where(subblock > 0, EventClass.SUBBLOCK_ERROR, EventClass.OK).astype(np.int64)
        retx = np.stack(retx_all, axis=1)
        alarm = np.stack(alarm_all, axis=1)
        dec = np.stack(dec_all, axis=1)
        chunk_arr = np.stack(chunks, axis=1)
        flags = {
            "initial_correct": np.stack([i == c for i, c in zip(initial, chunks)], axis=1),
            "alarm_sent": retx,
            "alarm_detected": alarm,
            "retx_correct": retx & (dec == chunk_arr),
        }
        times, alphabets = self._feedback_schedule()
        return BatchResult(
            self, messages, x, y, decoded_total, cls, flags, times, alphabets,
            np.concatenate(symbols, axis=1),
            details={"initial": np.stack(initial, axis=1), "retx": retx, "alarm": alarm,
                     "round_decoded": dec},
            subblock=subblock,
        )

    def events(self, result, i):
        d = result.details
        out = []
        for sb in range(self.k):
            o = sb * self.l
            out.append({"event": "subblock-boundary", "time": o + 1, "subblock": sb + 1})
            if sb < self.k - 1:
                out.append({"event": "initial-decode", "time": o + self.l1, "chunk": sb + 1,
                            "value": int(d["initial"][i, sb])})
            if sb >= 1:
                j = sb - 1
                s = o + self.l1 + 1
                if d["retx"][i, j]:
                    out.append({"event": "alarm-sent", "time": s, "chunk": j + 1,
                                "amplitude": self.amplitude})
                if d["alarm"][i, j]:
                    out.append({"event": "alarm-detected", "time": s, "chunk": j + 1})
                if d["retx"][i, j]:
                    out.append({"event": "retransmission", "start": s + 1, "end": o + self.l,
                                "chunk": j + 1, "power": self.amplitude ** 2})
        return out


def make_scheme(cfg: SchemeConfig, books=None, partition: PartitionMap | None = None) -> Scheme:
    v = cfg.variant
    if v is Variant.NO_FEEDBACK:
        return NoFeedbackScheme(cfg, books)
    if v is Variant.BLOCK_MARKOV:
        return BlockMarkovScheme(cfg, books)
    return RetransmissionScheme(cfg, books, partition)


# ---- single-trial entry points ------------------------------------------------------


def _single(scheme: Scheme, rng, noise, message, partitions=None) -> TrialOutcome:
    if rng is None:
        rng = np.random.default_rng()
    if message is None:
        message = int(rng.integers(scheme.cfg.num_messages))
    if noise is None:
        z = rng.standard_normal((1, scheme.n))
    elif hasattr(noise, "draw"):
        z = noise.draw((1, scheme.n))
    else:
        z = np.asarray(noise, dtype=np.float64).reshape(1, scheme.n)
    return scheme.run_batch(np.array([message]), z, partitions).outcome(0)


def _expect(cfg, *variants):
    if cfg.variant not in variants:
        raise InvalidParameterError(
            f"variant {cfg.variant.value} not accepted here (expected {[v.value for v in variants]})"
        )


def run_no_feedback(cfg, codebook: Codebook | None = None, rng=None, *, noise=None, message=None):
    """One NO_FEEDBACK trial: encode, transmit, ML-decode."""
    _expect(cfg, Variant.NO_FEEDBACK)
    books = {"C": codebook} if codebook is not None else None
    if codebook is not None and (codebook.blocklength != cfg.n or codebook.num_messages != cfg.num_messages):
        raise InvalidParameterError("codebook shape does not match the config")
    return _single(NoFeedbackScheme(cfg, books), rng, noise, message)


def run_two_phase(cfg, rng=None, *, noise=None, message=None, books=None):
    """One TWO_PHASE trial (full feedback of the initial decision)."""
    _expect(cfg, Variant.TWO_PHASE)
    return _single(RetransmissionScheme(cfg, books), rng, noise, message)


def run_multi_phase(cfg, rng=None, *, noise=None, message=None, books=None):
    _expect(cfg, Variant.MULTI_PHASE)
    return _single(RetransmissionScheme(cfg, books), rng, noise, message)


def run_compressed_feedback(cfg, partition: PartitionMap, rng=None, *, noise=None, message=None, books=None):
    """One COMPRESSED_FB trial: the receiver feeds back only the bin of its decision."""
    _expect(cfg, Variant.COMPRESSED_FB)
    if partition.num_messages != cfg.num_messages or partition.num_bins != cfg.num_bins:
        raise InvalidParameterError("partition shape does not match the config")
    return _single(RetransmissionScheme(cfg, books, partition), rng, noise, message)


def run_block_markov(cfg, rng=None, *, noise=None, message=None, books=None):
    _expect(cfg, Variant.BLOCK_MARKOV)
    return _single(BlockMarkovScheme(cfg, books), rng, noise, message)


def replay(transcript: Transcript) -> dict:
    """Re-run the receiver on stored outputs.

    Returns the recomputed decision and feedback symbols and whether both
    match the transcript.
    """
    cfg = SchemeConfig.from_dict(transcript.config)
    scheme = make_scheme(cfg)
    partitions = transcript.extras.get("partition")
    if partitions is not None:
        partitions = np.asarray(partitions)[None, :]
    got = scheme.receive(np.asarray(transcript.outputs)[None, :], partitions)
    decoded = int(got["decoded"][0])
    symbols = [int(s) for s in got["fb_symbols"][0]]
    stored = [fb.symbol for fb in transcript.feedback_symbols]
    return {
        "decoded": decoded,
        "decoded_matches": decoded == transcript.decoded,
        "feedback_matches": symbols == stored,
    }
