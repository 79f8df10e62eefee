import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbexp.channel import (
    SILENT,
    FeedbackSymbol,
    FixedNoise,
    GaussianNoise,
    Transcript,
    ZeroNoise,
    feedback_usage,
    power_usage,
    transmit,
)
from fbexp.errors import InvalidParameterError


def _transcript(inputs, feedback=(), outputs=None):
    return Transcript(
        message=0,
        inputs=tuple(inputs),
        outputs=tuple(outputs if outputs is not None else inputs),
        feedback_symbols=tuple(feedback),
        decoded=0,
    )


def test_silent_input_gives_unit_variance_noise():
    y = transmit(np.zeros(1_000_000), GaussianNoise(3))
    # var of the sample variance is 2/N for Gaussian data
    assert abs(y.var() - 1.0) <= 3 * math.sqrt(2 / 1_000_000)


def test_noise_moments():
    z = transmit(np.full(1_000_000, 2.5), GaussianNoise(9)) - 2.5
    N = z.size
    assert abs(z.mean()) <= 3 / math.sqrt(N)
    kurt = np.mean(z**4) / np.mean(z**2) ** 2
    # var of the sample kurtosis of normal data is about 24/N
    assert abs(kurt - 3.0) <= 3 * math.sqrt(24 / N)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.integers(0, 2**32))
def test_additivity(x, seed):
    x = np.array(x)
    y = transmit(x, GaussianNoise(seed))
    z = transmit(np.zeros_like(x), GaussianNoise(seed))
    assert np.array_equal(y, x + z)


def test_noise_source_tracks_position():
    src = GaussianNoise(1)
    src.draw((3, 4))
    src.draw(5)
    assert src.position == 17


def test_stub_sources():
    assert np.array_equal(transmit(np.ones(3), ZeroNoise()), np.ones(3))
    out = transmit(np.zeros((2, 3)), FixedNoise([1.0, 2.0, 3.0]))
    assert np.array_equal(out, [[1, 2, 3], [1, 2, 3]])
    with pytest.raises(InvalidParameterError):
        transmit(np.zeros(3), np.zeros(4))


def test_power_usage_examples():
    assert power_usage(_transcript([0.0] * 5)) == 0.0
    P, gamma, n = 1.0, 0.04, 20
    alarm = [SILENT] * n
    alarm[7] = math.sqrt(P / gamma)
    assert power_usage(_transcript(alarm)) == pytest.approx(P / (gamma * n), rel=1e-15)
    from fbexp.codec import generate_codebook

    cw = generate_codebook(1, 9, 2.0, 0)[0]
    assert power_usage(_transcript(cw.tolist())) == pytest.approx(2.0, rel=1e-14)


def test_feedback_usage_examples():
    assert feedback_usage(_transcript([0.0])) == (0.0, 0.0)
    n, M = 30, 16
    t = _transcript([0.0] * n, [FeedbackSymbol(25, 3, M)])
    assert feedback_usage(t) == (math.log(M), math.log(M))
    symbols = [FeedbackSymbol(t, t % 2, 2) for t in range(1, 31)]
    total, per_use = feedback_usage(_transcript([0.0] * n, symbols))
    assert total == pytest.approx(sum(math.log(2) for _ in symbols), rel=1e-15)
    assert per_use == math.log(2)


def test_feedback_symbol_must_fit_alphabet():
    with pytest.raises(InvalidParameterError):
        _transcript([0.0], [FeedbackSymbol(1, 4, 4)])
    with pytest.raises(InvalidParameterError):
        _transcript([0.0, 1.0], outputs=[0.0])


def test_transcript_json_round_trip():
    t = Transcript(
        message=3,
        inputs=(0.1, -0.2, 0.0),
        outputs=(0.3, 1e-300, -2.0),
        feedback_symbols=(FeedbackSymbol(2, 1, 4),),
        decoded=3,
        events=({"event": "initial-decode", "time": 2, "value": 3},),
        variant="TWO_PHASE",
        config={"n": 3},
        master_seed=5,
        trial=9,
        extras={"partition": [0, 1, 1, 0]},
    )
    line = t.to_json()
    assert "\n" not in line
    assert Transcript.from_json(line) == t
