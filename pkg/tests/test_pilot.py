import numpy as np
import pytest

from fbexp.errors import InvalidParameterError
from fbexp.schemes import (
    SchemeConfig,
    Variant,
    build_codebooks,
    pilot_gamma,
    pilot_gamma_ladder,
    resolve_config,
)
from fbexp.schemes.pilot import GAMMA_CAP
from fbexp.streams import derive_rng

TWO = SchemeConfig(variant=Variant.TWO_PHASE, n=30, num_messages=16, P=1.0, epsilon=0.12,
                   gamma="pilot", pilot_trials=20000)


def test_pilot_gamma_is_safety_times_error_rate():
    gamma = pilot_gamma(TWO)
    # recompute the pilot by hand on the scheme's own initial codebook
    book = build_codebooks(TWO.replace(gamma=0.5))["C1"]
    rng = derive_rng(TWO.seed, "pilot", "initial")
    m = rng.integers(16, size=20000)
    y = book.encode(m) + rng.standard_normal((20000, 25))
    errors = int(np.count_nonzero(book.decode(y) != m))
    assert gamma == pytest.approx(2.0 * max(errors, 3) / 20000)
    assert pilot_gamma(TWO) == gamma


def test_pilot_gamma_capped_and_floored():
    noisy = SchemeConfig(variant=Variant.TWO_PHASE, n=5, num_messages=64, P=0.1, epsilon=0.2,
                         gamma="pilot", pilot_trials=2000)
    assert pilot_gamma(noisy) == GAMMA_CAP
    clean = SchemeConfig(variant=Variant.TWO_PHASE, n=30, num_messages=2, P=10.0, epsilon=0.1,
                         gamma="pilot", pilot_trials=1000)
    assert pilot_gamma(clean) == pytest.approx(2.0 * 3 / 1000)


def test_resolve_config():
    cfg = resolve_config(TWO)
    assert isinstance(cfg.gamma, float) and 0 < cfg.gamma < 1
    cfg.validate()
    assert resolve_config(cfg) == cfg


def test_ladder_strictly_increasing_powers():
    multi = SchemeConfig(variant=Variant.MULTI_PHASE, n=30, num_messages=16, P=1.0, L=3,
                         epsilon=0.12, gammas="pilot", pilot_trials=20000)
    cfg = resolve_config(multi).validate()
    assert len(cfg.gammas) == 2 and all(0 < g < 1 for g in cfg.gammas)
    powers = cfg.round_powers()
    assert 1.0 < powers[0] < powers[1]
    with pytest.raises(InvalidParameterError):
        pilot_gamma_ladder(TWO)
