"""Pilot Monte Carlo estimates that turn ``gamma = pilot`` into numbers.

The retransmission-trigger probability of a scheme is the error rate of its
initial code, which is only known by simulation. The pilot measures it on the
scheme's own codebook and multiplies by ``cfg.safety``. Over-estimating gamma
lowers the boost power, which keeps the average-power audit conservative.
"""

from __future__ import annotations

import math

import numpy as np

from ..codec import Codebook, q_function
from ..errors import InvalidParameterError
from ..streams import derive_rng
from .config import PILOT, SchemeConfig, Variant
from .protocols import build_codebooks

GAMMA_CAP = 0.99
_PILOT_BLOCK = 65536


def _error_rate(book: Codebook, trials: int, rng: np.random.Generator) -> float:
    """Plain ML error rate; zero observed errors are replaced by the rule-of-three bound 3/N."""
    errors, done = 0, 0
    while done < trials:
        b = min(_PILOT_BLOCK, trials - done)
        m = rng.integers(book.num_messages, size=b)
        y = book.encode(m) + rng.standard_normal((b, book.blocklength))
        errors += int(np.count_nonzero(book.decode(y) != m))
        done += b
    return max(errors, 3) / trials


def _round_failure_rate(book: Codebook, amplitude: float, trials: int, rng) -> float:
    """Pr{estimate still wrong after a round | it was wrong entering the round}."""
    failures, done = 0, 0
    threshold = amplitude / 2.0
    while done < trials:
        b = min(_PILOT_BLOCK, trials - done)
        m = rng.integers(book.num_messages, size=b)
        alarm = amplitude + rng.standard_normal(b) >= threshold
        y = book.encode(m) + rng.standard_normal((b, book.blocklength))
        failures += int(np.count_nonzero(~alarm | (book.decode(y) != m)))
        done += b
    return max(failures, 3) / trials


def _initial_book(cfg: SchemeConfig) -> Codebook:
    # gamma only scales the retransmission codebooks, so any placeholder works here
    if cfg.variant is Variant.MULTI_PHASE:
        probe = cfg.replace(gamma=None, gammas=(0.5,) * (cfg.L - 1))
    else:
        probe = cfg.replace(gamma=0.5)
    books = build_codebooks(probe)
    if cfg.variant is Variant.BLOCK_MARKOV:
        return books[f"BM1-{max(cfg.chunk_bits)}"]
    return books["C1"]


def pilot_gamma(cfg: SchemeConfig, trials: int | None = None, seed: int | None = None,
                safety: float | None = None) -> float:
    """``safety`` times the estimated error rate of the scheme's initial code."""
    trials = int(trials or cfg.pilot_trials)
    safety = cfg.safety if safety is None else safety
    rng = derive_rng(cfg.seed if seed is None else seed, "pilot", "initial")
    p = _error_rate(_initial_book(cfg), trials, rng)
    return min(safety * p, GAMMA_CAP)


def pilot_gamma_ladder(cfg: SchemeConfig, trials: int | None = None, seed: int | None = None,
                       safety: float | None = None) -> tuple[float, ...]:
    """Boost ladder for MULTI_PHASE.

    Tracks g_i, the estimated probability that the receiver's estimate is
    wrong after round i, via
    ``g_{i+1} = g_i * a_i + (1 - g_i) * Q(threshold_i)``, where a_i is the
    simulated failure rate of a round entered in error and the second term
    bounds false alarms. Round i+1 is sent at power ``P / (safety * g_i)``;
    the returned per-round gammas are the ratios of consecutive cumulative
    values.
    """
    if cfg.variant is not Variant.MULTI_PHASE:
        raise InvalidParameterError("gamma ladders are only defined for MULTI_PHASE")
    trials = int(trials or cfg.pilot_trials)
    safety = cfg.safety if safety is None else safety
    seed = cfg.seed if seed is None else seed
    g = _error_rate(_initial_book(cfg), trials, derive_rng(seed, "pilot", "initial"))
    cumulative = [min(safety * g, GAMMA_CAP)]
    for i in range(1, cfg.L - 1):
        gammas = tuple(c / p for c, p in zip(cumulative, [1.0] + cumulative[:-1]))
        probe = cfg.replace(gamma=None, gammas=gammas + (0.5,) * (cfg.L - 1 - len(gammas)))
        book = build_codebooks(probe)[f"C{i + 1}"]
        amplitude = math.sqrt(book.power)
        a = _round_failure_rate(book, amplitude, trials, derive_rng(seed, "pilot", f"round-{i}"))
        g = g * a + (1.0 - g) * q_function(amplitude / 2.0)
        nxt = safety * g
        if not nxt < cumulative[-1]:
            raise InvalidParameterError(
                f"pilot ladder does not decrease at round {i + 1}: {nxt!r} >= {cumulative[-1]!r}"
            )
        cumulative.append(nxt)
    return tuple(c / p for c, p in zip(cumulative, [1.0] + cumulative[:-1]))


def resolve_config(cfg: SchemeConfig) -> SchemeConfig:
    """Replace every ``pilot`` placeholder by its pilot estimate."""
    if cfg.gammas == PILOT:
        cfg = cfg.replace(gammas=pilot_gamma_ladder(cfg))
    if cfg.gamma == PILOT:
        if cfg.variant is Variant.MULTI_PHASE:
            cfg = cfg.replace(gamma=None)
        else:
            cfg = cfg.replace(gamma=pilot_gamma(cfg))
    return cfg
