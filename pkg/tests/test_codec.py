import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbexp.codec import (
    Codebook,
    antipodal_codebook,
    generate_codebook,
    ml_decode,
    num_messages_for_rate,
    pairwise_union_bound,
    q_function,
)
from fbexp.errors import InvalidParameterError


def test_q_function_oracle():
    # mpmath erfc at 50 digits
    assert q_function(2.0) == pytest.approx(0.0227501319481792072, rel=1e-14)
    assert q_function(2.5) == pytest.approx(0.006209665325776135167, rel=1e-14)
    assert q_function(0.0) == 0.5
    arr = q_function(np.array([[0.0, 2.0]]))
    assert arr.shape == (1, 2) and arr[0, 1] == q_function(2.0)


def test_sphere_normalization():
    book = generate_codebook(4, 8, 1.0, 42)
    assert np.allclose(np.sum(book.codewords**2, axis=1), 8.0, atol=1e-9)
    assert book.num_messages == 4 and book.blocklength == 8
    assert book.rate == pytest.approx(math.log(4) / 8)


@given(st.integers(1, 40), st.integers(1, 30), st.floats(0.01, 100.0), st.integers(0, 2**63))
@settings(max_examples=50)
def test_sphere_property(M, n, P, seed):
    book = generate_codebook(M, n, P, seed)
    assert np.allclose(book.norms_sq, n * P, rtol=1e-9)


def test_generation_is_deterministic_and_label_separated():
    a = generate_codebook(8, 5, 2.0, 7, label="C1")
    b = generate_codebook(8, 5, 2.0, 7, label="C1")
    c = generate_codebook(8, 5, 2.0, 7, label="C2")
    assert np.array_equal(a.codewords, b.codewords)
    assert not np.array_equal(a.codewords, c.codewords)


def test_codebook_is_read_only():
    book = generate_codebook(2, 3, 1.0, 0)
    with pytest.raises(ValueError):
        book.codewords[0, 0] = 1.0


@pytest.mark.parametrize("args", [(0, 4, 1.0), (4, 0, 1.0), (4, 4, 0.0), (4, 4, -1.0)])
def test_generation_rejects_bad_dimensions(args):
    with pytest.raises(InvalidParameterError):
        generate_codebook(*args, seed=0)


def test_single_message_code_decodes_constant():
    book = generate_codebook(1, 5, 1.0, 3)
    rng = np.random.default_rng(0)
    assert np.all(book.decode(rng.standard_normal((20, 5))) == 0)
    assert book.decode(np.zeros(5)) == 0


def test_random_pair_inner_products_centered():
    # directions uniform on the circle: <x1, x2> / (nP) = cos(theta) has mean 0, variance 1/2
    inner = np.array([
        float(np.dot(*generate_codebook(2, 2, 1.0, s).codewords)) / 2.0 for s in range(1000)
    ])
    assert abs(inner.mean()) <= 3 * math.sqrt(0.5 / 1000)


def test_zero_noise_identity():
    book = generate_codebook(32, 6, 1.0, 1)
    messages = np.arange(32)
    assert np.array_equal(book.decode(book.encode(messages)), messages)


def test_tie_goes_to_smallest_index():
    book = Codebook(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]), 1.0)
    assert ml_decode(book, np.array([0.0, -0.5])) == 0
    assert ml_decode(book, np.array([0.0, 0.0])) == 0
    # exact tie between messages 1 and 2
    assert ml_decode(book, np.array([-0.5, 0.5])) == 1


def test_near_tie_uses_exact_distances():
    # Gram-form rounding would otherwise pick either side
    big = 1e8
    book = Codebook(np.array([[big, 1.0], [big, -1.0]]), 1.0)
    assert ml_decode(book, np.array([big, 1e-12])) == 0
    assert ml_decode(book, np.array([big, -1e-7])) == 1


def test_length_mismatch():
    book = generate_codebook(4, 3, 1.0, 0)
    with pytest.raises(InvalidParameterError):
        book.decode(np.zeros(4))


@given(st.integers(0, 10_000))
@settings(max_examples=40)
def test_decode_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    book = generate_codebook(4, 5, 1.0, seed)
    y = rng.normal(scale=2.0, size=(64, 5))
    brute = [min(range(4), key=lambda m: (float(np.sum((row - book[m]) ** 2)), m)) for row in y]
    assert list(book.decode(y)) == brute


def test_union_bound_antipodal():
    book = antipodal_codebook(3, 2.0)
    assert pairwise_union_bound(book) == pytest.approx(q_function(math.sqrt(6.0)), rel=1e-14)
    with pytest.raises(InvalidParameterError):
        pairwise_union_bound(generate_codebook(1, 3, 1.0, 0))


def test_union_bound_dominates_monte_carlo():
    book = generate_codebook(4, 8, 1.0, 11)
    bound = pairwise_union_bound(book)
    rng = np.random.default_rng(5)
    trials = 1_000_000
    worst = 0.0
    for m in range(4):
        y = book[m] + rng.standard_normal((trials // 4, 8))
        p = float(np.mean(book.decode(y) != m))
        worst = max(worst, p - 3 * math.sqrt(p * (1 - p) / (trials // 4)))
    assert worst <= bound


def test_num_messages_for_rate():
    assert num_messages_for_rate(30, math.log(16) / 30) == 16
    assert num_messages_for_rate(10, 0.1) == 3
    assert num_messages_for_rate(5, 0.0) == 1


def test_csv_dump(tmp_path):
    book = generate_codebook(3, 2, 1.0, 0)
    path = tmp_path / "book.csv"
    book.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "message,x1,x2"
    assert len(lines) == 4
    assert float(lines[2].split(",")[1]) == book[1][0]
