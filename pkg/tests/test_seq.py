"""Nucleotide string <-> code array utilities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnapix import seq
from dnapix.exceptions import MalformedAlphabet

dna = st.text(alphabet="ACGT", min_size=0, max_size=60)


@given(dna)
@settings(max_examples=100, deadline=None)
def test_roundtrip(s):
    assert seq.decode_seq(seq.encode_seq(s)) == s


def test_code_values():
    assert seq.encode_seq("ACGT").tolist() == [seq.A, seq.C, seq.G, seq.T]
    assert (seq.A, seq.C, seq.G, seq.T) == (0, 1, 2, 3)


def test_bad_symbol_rejected():
    with pytest.raises(MalformedAlphabet):
        seq.encode_seq("ACGX")


def test_gc_fraction_oracle():
    # hand count: 3 of 8 symbols are G or C
    assert seq.gc_fraction(seq.encode_seq("ACGTATAC")) == pytest.approx(3 / 8)
    assert seq.gc_fraction(seq.encode_seq("GGCC")) == 1.0
    assert seq.gc_fraction(seq.encode_seq("ATAT")) == 0.0


def test_gc_window_fractions_oracle():
    codes = seq.encode_seq("GGGGAAAA")
    # windows of 4: GGGG=1, GGGA=.75, GGAA=.5, GAAA=.25, AAAA=0
    got = seq.gc_window_fractions(codes, 4)
    assert np.allclose(got, [1.0, 0.75, 0.5, 0.25, 0.0])


def test_homopolymer_oracle():
    codes = seq.encode_seq("AACCCGTTTT")
    assert seq.max_homopolymer(codes) == 4
    runs = seq.homopolymer_runs(codes)
    assert max(length for _start, length in runs) == 4


@given(dna.filter(lambda s: len(s) > 0))
@settings(max_examples=60, deadline=None)
def test_max_homopolymer_bounds(s):
    m = seq.max_homopolymer(seq.encode_seq(s))
    assert 1 <= m <= len(s)
