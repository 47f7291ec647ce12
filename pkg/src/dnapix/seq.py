"""Nucleotide sequence helpers: string/code conversion and composition checks.

Internally sequences travel as numpy uint8 arrays with A=0, C=1, G=2, T=3.
"""

import numpy as np

from .exceptions import MalformedAlphabet

ALPHABET = "ACGT"
A, C, G, T = 0, 1, 2, 3

_ENC = np.full(256, 255, dtype=np.uint8)
for _i, _ch in enumerate(ALPHABET):
    _ENC[ord(_ch)] = _i
    _ENC[ord(_ch.lower())] = _i
_DEC = np.frombuffer(ALPHABET.encode(), dtype=np.uint8)


def encode_seq(s):
    """String of A/C/G/T -> uint8 code array. Raises MalformedAlphabet."""
    raw = np.frombuffer(s.encode("ascii", "replace"), dtype=np.uint8)
    codes = _ENC[raw]
    if codes.size and codes.max() > 3:
        bad = int(np.argmax(codes > 3))
        raise MalformedAlphabet(f"invalid symbol {s[bad]!r} at position {bad}")
    return codes


def decode_seq(codes):
    """uint8 code array -> string."""
    codes = np.asarray(codes, dtype=np.uint8)
    if codes.size and codes.max() > 3:
        raise MalformedAlphabet("code out of range")
    return _DEC[codes].tobytes().decode("ascii")


def as_codes(seq):
    """Accept either a string or a code array."""
    if isinstance(seq, str):
        return encode_seq(seq)
    return np.ascontiguousarray(seq, dtype=np.uint8)


def gc_fraction(codes):
    codes = as_codes(codes)
    if codes.size == 0:
        return 0.0
    return float(np.count_nonzero((codes == C) | (codes == G)) / codes.size)


def gc_window_fractions(codes, window):
    """GC fraction of every length-`window` sliding window (step 1)."""
    codes = as_codes(codes)
    if codes.size < window:
        return np.zeros(0, dtype=np.float64)
    is_gc = ((codes == C) | (codes == G)).astype(np.int32)
    csum = np.concatenate([[0], np.cumsum(is_gc)])
    counts = csum[window:] - csum[:-window]
    return counts / float(window)


def homopolymer_runs(codes):
    """All maximal runs as (start, length) pairs, longest-first input order."""
    codes = as_codes(codes)
    if codes.size == 0:
        return []
    change = np.flatnonzero(np.diff(codes) != 0)
    starts = np.concatenate([[0], change + 1])
    ends = np.concatenate([change + 1, [codes.size]])
    return [(int(s), int(e - s)) for s, e in zip(starts, ends)]


def max_homopolymer(codes):
    runs = homopolymer_runs(codes)
    return max((ln for _, ln in runs), default=0)
