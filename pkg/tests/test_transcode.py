"""Constrained DNA block transcoder: packing, constraints, CRC, parity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnapix import seq, transcode
from dnapix.exceptions import CrcMismatch

payloads = st.integers(0, 2**32).map(
    lambda s: np.random.default_rng(s)
    .integers(0, 2, transcode.BLOCK_PAYLOAD_BITS)
    .astype(np.uint8)
)


# ---------------------------------------------------------------------------
# base conversion


def test_trit_value_oracle():
    """131071 = 2^17 - 1 in base 3, digits from an independent divmod oracle."""
    value = 131071
    digits = []
    v = value
    for _ in range(11):
        v, r = divmod(v, 3)
        digits.append(r)
    digits.reverse()
    assert digits == [2, 0, 1, 2, 2, 2, 1, 0, 1, 1, 1]
    bits = np.ones(17, dtype=np.uint8)
    assert transcode.bits_to_trits(bits).tolist() == digits


def test_zero_bits_zero_trits():
    assert transcode.bits_to_trits(np.zeros(17, dtype=np.uint8)).tolist() == [0] * 11


@given(st.integers(0, 2**40))
@settings(max_examples=100, deadline=None)
def test_bits_trits_roundtrip(seed):
    bits = np.random.default_rng(seed).integers(0, 2, 17 * 3).astype(np.uint8)
    back = transcode.trits_to_bits(transcode.bits_to_trits(bits))
    assert np.array_equal(back[: bits.size], bits)


@given(st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_rotation_code_no_adjacent_repeats(seed):
    trits = np.random.default_rng(seed).integers(0, 3, 80).astype(np.uint8)
    nt = transcode.trits_to_nt(trits)
    codes = seq.encode_seq(nt)
    assert (np.diff(codes) != 0).all()
    assert np.array_equal(transcode.nt_to_trits(nt), trits)


# ---------------------------------------------------------------------------
# CRC


def test_crc16_ccitt_false_check_value():
    # published check value for CRC-16/CCITT-FALSE over ASCII "123456789"
    data = np.frombuffer(b"123456789", dtype=np.uint8)
    assert int(transcode.crc16_ccitt(data)[0]) == 0x29B1


def test_crc16_empty_is_init():
    assert int(transcode.crc16_ccitt(np.zeros((1, 0), dtype=np.uint8))[0]) == 0xFFFF


# ---------------------------------------------------------------------------
# block roundtrip


@given(payloads, st.integers(0, 255), st.integers(0, 2**24 - 1), st.booleans())
@settings(max_examples=60, deadline=None)
def test_block_roundtrip(payload, tag, index, flag):
    block = transcode.encode_block(payload, tag, index, flag)
    header, payload_bits = transcode.decode_block(block.nt_sequence)
    assert header.layer_tag == tag
    assert header.block_index == index
    assert header.parity_flag == flag
    assert np.array_equal(payload_bits, payload)
    assert len(block.nt_sequence) == transcode.BLOCK_NT


@given(payloads)
@settings(max_examples=40, deadline=None)
def test_block_satisfies_constraints(payload):
    block = transcode.encode_block(payload, 0, 0)
    report = transcode.validate_constraints(block.nt_sequence)
    assert report.ok, report


def test_corruption_detected():
    payload = np.zeros(transcode.BLOCK_PAYLOAD_BITS, dtype=np.uint8)
    block = transcode.encode_block(payload, 1, 2)
    codes = seq.encode_seq(block.nt_sequence)
    # substitute to a base distinct from both neighbors so the rotation code
    # still parses and detection falls to the CRC
    neighbors = {codes[69], codes[70], codes[71]}
    codes[70] = next(b for b in range(4) if b not in neighbors)
    with pytest.raises(CrcMismatch):
        transcode.decode_block(seq.decode_seq(codes))


def test_batch_matches_scalar():
    rng = np.random.default_rng(5)
    n = 50
    mat = rng.integers(0, 2, (n, transcode.BLOCK_PAYLOAD_BITS)).astype(np.uint8)
    codes, seeds = transcode.encode_blocks(mat, 7, np.arange(n), 0)
    for i in range(0, n, 7):
        scalar = transcode.encode_block(mat[i], 7, i, False)
        assert seq.decode_seq(codes[i]) == scalar.nt_sequence
    tags, idxs, flags, _s, pays, ok = transcode.decode_blocks(codes)
    assert ok.all()
    assert (tags == 7).all()
    assert np.array_equal(idxs, np.arange(n))
    assert np.array_equal(pays, mat)


def test_batch_corruption_flags_only_bad_rows():
    rng = np.random.default_rng(6)
    mat = rng.integers(0, 2, (10, transcode.BLOCK_PAYLOAD_BITS)).astype(np.uint8)
    codes, _ = transcode.encode_blocks(mat, 0, np.arange(10), 0)
    codes[4, 100] = (codes[4, 100] + 1) % 4
    *_, ok = transcode.decode_blocks(codes)
    assert not ok[4]
    assert ok.sum() == 9


# ---------------------------------------------------------------------------
# parity


def test_parity_recovers_single_erasure():
    rng = np.random.default_rng(8)
    group = [
        rng.integers(0, 2, transcode.BLOCK_PAYLOAD_BITS).astype(np.uint8)
        for _ in range(8)
    ]
    parity_block = transcode.build_parity(group, group_index=0, layer_tag=1, parity_base=8)
    assert parity_block.header.parity_flag
    assert parity_block.header.block_index == 8
    lost = group.pop(3)
    recovered = transcode.recover_with_parity(group, parity_block.payload_bits)
    assert np.array_equal(recovered, lost)


def test_xor_identity():
    rng = np.random.default_rng(9)
    a = rng.integers(0, 2, transcode.BLOCK_PAYLOAD_BITS).astype(np.uint8)
    b = rng.integers(0, 2, transcode.BLOCK_PAYLOAD_BITS).astype(np.uint8)
    assert np.array_equal(transcode.xor_payloads([a, b, a]), b)


# ---------------------------------------------------------------------------
# layer chunking


@given(st.integers(0, 2**32), st.integers(1, 400))
@settings(max_examples=30, deadline=None)
def test_layer_roundtrip(seed, n_bytes):
    data = np.random.default_rng(seed).integers(0, 256, n_bytes).astype(np.uint8).tobytes()
    codes, meta = transcode.encode_layer_blocks(data, layer_tag=2)
    tags, idxs, flags, _s, pays, ok = transcode.decode_blocks(codes)
    assert ok.all()
    mat = pays[: meta["n_data"]]
    assert transcode.payload_matrix_to_layer(mat) == data


def test_layer_parity_counts():
    data = bytes(range(200))
    _codes, meta = transcode.encode_layer_blocks(data, layer_tag=0, parity_group=8)
    assert meta["n_parity"] == -(-meta["n_data"] // 8)


def test_scrambler_seed_deterministic():
    payload = np.zeros(transcode.BLOCK_PAYLOAD_BITS, dtype=np.uint8)
    a = transcode.encode_block(payload, 0, 0)
    b = transcode.encode_block(payload, 0, 0)
    assert a.nt_sequence == b.nt_sequence
    assert a.header.scrambler_seed == b.header.scrambler_seed
