from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirand.protocols import FiniteBits, SeedExhausted, SeedSource, SourceBits, UniformBits
from dirand.sources import SourceModel


def test_finite_bits_exhaust():
    src = SeedSource(FiniteBits([1, 0, 1]))
    assert src.bits(2, "x").tolist() == [1, 0]
    with pytest.raises(SeedExhausted):
        src.bits(2, "x")
    assert src.balanced()


def test_raw_bits_are_charged(rng):
    src = SeedSource(UniformBits(rng))
    src.bits(5, "a")
    src.bits(7, "b")
    assert src.summary() == {"drawn": 12, "by_category": {"a": 5, "b": 7}}


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.lists(
        st.one_of(
            st.tuples(st.just("bits"), st.integers(0, 40)),
            st.tuples(st.just("int"), st.integers(1, 1000)),
            st.tuples(st.just("bern"), st.integers(1, 97)),
            st.tuples(st.just("freq"), st.lists(st.integers(0, 50), min_size=2, max_size=6).filter(lambda f: sum(f) > 0)),
        ),
        max_size=40,
    ),
)
def test_ledger_identity_under_mixed_requests(seed, ops):
    src = SeedSource(UniformBits(np.random.default_rng(seed)))
    for i, (kind, arg) in enumerate(ops):
        cat = f"c{i % 3}"
        if kind == "bits":
            src.bits(arg, cat)
        elif kind == "int":
            assert 0 <= src.uniform_int(arg, cat) < arg
        elif kind == "bern":
            src.bernoulli(1, arg, cat)
        else:
            s = src.categorical_freq(arg, cat)
            assert arg[s] > 0
    assert src.drawn == sum(src.ledger.values())


@pytest.mark.parametrize("freqs", [[1, 1], [1, 3], [5, 0, 3, 8], [65536 - 3 * 6554, 6554, 6554, 6554]])
def test_categorical_frequencies(freqs, rng):
    src = SeedSource(UniformBits(rng))
    n = 40_000
    counts = np.bincount([src.categorical_freq(freqs, "x") for _ in range(n)], minlength=len(freqs))
    p = np.array(freqs) / sum(freqs)
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 5 * sigma + 1e-9)
    assert counts[p == 0].sum() == 0


def test_categorical_costs_about_its_entropy(rng):
    # Recycling keeps the cost close to the Shannon entropy per draw.
    src = SeedSource(UniformBits(rng))
    n = 20_000
    for _ in range(n):
        src.bernoulli(1, 4, "x")
    h = -(0.25 * np.log2(0.25) + 0.75 * np.log2(0.75))
    assert src.drawn / n < h + 0.05


def test_categorical_exact_rationals(rng):
    src = SeedSource(UniformBits(rng))
    assert src.categorical([Fraction(1, 3), Fraction(2, 3)], "x") in (0, 1)
    with pytest.raises(ValueError):
        src.categorical([0.5, 0.6], "x")


def test_recording(rng):
    src = SeedSource(UniformBits(rng), record=True)
    a = src.bits(3, "x")
    src.uniform_int(5, "y")
    rec = src.consumed_bits()
    assert rec.size == src.drawn
    np.testing.assert_array_equal(rec[:3], a)
    with pytest.raises(RuntimeError):
        SeedSource(UniformBits(rng)).consumed_bits()


def test_source_bits_stream_fixed_length_sources(rng):
    sb = SourceBits(SourceModel.flat(3, [0, 7]), rng)
    bits = sb.next_bits(9).reshape(3, 3)
    assert all(row.sum() in (0, 3) for row in bits)


def test_source_bits_sv_program_sees_history(rng):
    # An SV program that always pushes toward repeating the last bit.
    def prog(prefix):
        return 0.5 if not prefix else (0.6 if prefix[-1] == 0 else 0.4)

    sb = SourceBits(SourceModel.sv(0.1, prog), rng)
    bits = sb.next_bits(4000)
    same = np.mean(bits[1:] == bits[:-1])
    assert 0.56 < same < 0.64
