"""Constrained transcoding between bit payloads and fixed-length DNA blocks.

Each block is exactly 148 nt.  Bits are packed 17-at-a-time into 11 base-3
digits, and each trit picks one of the three nucleotides different from the
previous one, so homopolymers never exceed length 1 by construction.  A
seeded scrambler mask is retried (seeds 0..255) until every sliding GC
window lands inside the configured band; the winning seed rides in the
header in the clear.  A CRC-16/CCITT-FALSE over header+payload guards every
block, and XOR parity blocks repair one erasure per group.

The heavy paths are batch-oriented: ``encode_blocks`` / ``decode_blocks``
operate on whole layers at once.
"""

from dataclasses import dataclass, field

import numpy as np

from . import seq
from .exceptions import CrcMismatch, DnapixError, MalformedAlphabet, NoValidSeed

BLOCK_NT = 148
BITS_PER_GROUP = 17
TRITS_PER_GROUP = 11
GROUPS_PER_BLOCK = BLOCK_NT // TRITS_PER_GROUP  # 13
PAD_TRITS = BLOCK_NT - GROUPS_PER_BLOCK * TRITS_PER_GROUP  # 5
BLOCK_TOTAL_BITS = GROUPS_PER_BLOCK * BITS_PER_GROUP  # 221
HEADER_BITS = 64  # tag 8 | index 24 | parity 1 | seed 8 | reserved 7 | crc 16
BLOCK_PAYLOAD_BITS = BLOCK_TOTAL_BITS - HEADER_BITS  # 157

PAD_LAYER_TAG = 255

_SEED_LO, _SEED_HI = 33, 41  # seed field bit span, kept unscrambled
_CRC_LO, _CRC_HI = 48, 64

_INITIAL_BASE = seq.A


@dataclass(frozen=True)
class ConstraintConfig:
    homopolymer_max: int = 3
    gc_window: int = 50
    gc_min: float = 0.40
    gc_max: float = 0.60

    def __post_init__(self):
        if not (0.0 < self.gc_min < self.gc_max < 1.0):
            raise DnapixError("need 0 < gc_min < gc_max < 1")
        if self.gc_window < 10:
            raise DnapixError("gc_window must be >= 10")


@dataclass(frozen=True)
class BlockHeader:
    layer_tag: int
    block_index: int
    parity_flag: bool
    scrambler_seed: int
    crc: int


@dataclass(frozen=True)
class OligoBlock:
    header: BlockHeader
    payload_bits: np.ndarray  # (BLOCK_PAYLOAD_BITS,) uint8 of 0/1
    nt_sequence: str

    def __post_init__(self):
        if len(self.nt_sequence) != BLOCK_NT:
            raise DnapixError("block must be exactly 148 nt")


@dataclass
class ConstraintReport:
    homopolymer_violations: list = field(default_factory=list)  # (pos, run_len)
    gc_violations: list = field(default_factory=list)  # (window_start, fraction)

    @property
    def ok(self):
        return not self.homopolymer_violations and not self.gc_violations


# ---------------------------------------------------------------------------
# deterministic scrambler masks and CRC table


def _build_masks():
    # xorshift32 keyed by seed; fixed here so blocks are portable across runs
    state = ((np.arange(256, dtype=np.uint64) + 1) * np.uint64(2654435761)).astype(
        np.uint32
    )
    words = []
    for _ in range(7):
        state = state ^ (state << np.uint32(13))
        state = state ^ (state >> np.uint32(17))
        state = state ^ (state << np.uint32(5))
        words.append(state.copy())
    w = np.stack(words, axis=1)  # (256, 7) uint32
    shifts = np.arange(31, -1, -1, dtype=np.uint32)
    bits = ((w[:, :, None] >> shifts) & np.uint32(1)).astype(np.uint8)
    bits = bits.reshape(256, 224)[:, :BLOCK_TOTAL_BITS].copy()
    bits[:, _SEED_LO:_SEED_HI] = 0  # seed field stays readable pre-descramble
    return bits


_MASKS = _build_masks()


def _build_crc_table():
    poly = 0x1021
    tbl = np.zeros(256, dtype=np.uint16)
    for i in range(256):
        c = i << 8
        for _ in range(8):
            c = ((c << 1) ^ poly) if (c & 0x8000) else (c << 1)
            c &= 0xFFFF
        tbl[i] = c
    return tbl


_CRC_TABLE = _build_crc_table()


def crc16_ccitt(data):
    """CRC-16/CCITT-FALSE over rows of a (N, L) uint8 byte matrix -> (N,)."""
    data = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    crc = np.full(data.shape[0], 0xFFFF, dtype=np.uint16)
    for col in range(data.shape[1]):
        idx = ((crc >> np.uint16(8)) ^ data[:, col]).astype(np.uint8)
        crc = _CRC_TABLE[idx] ^ (crc << np.uint16(8))
    return crc


def _block_crc(bits_2d):
    """CRC over header-sans-crc (bits 0..47) + payload bits, zero-padded to bytes."""
    n = bits_2d.shape[0]
    stream = np.zeros((n, 208), dtype=np.uint8)
    stream[:, :48] = bits_2d[:, :_CRC_LO]
    stream[:, 48 : 48 + BLOCK_PAYLOAD_BITS] = bits_2d[:, HEADER_BITS:]
    return crc16_ccitt(np.packbits(stream, axis=1))


# ---------------------------------------------------------------------------
# bits <-> trits <-> nucleotides

_POW2 = (1 << np.arange(BITS_PER_GROUP - 1, -1, -1)).astype(np.int64)
_POW3 = (3 ** np.arange(TRITS_PER_GROUP - 1, -1, -1)).astype(np.int64)


def bits_to_trits(bits):
    """Fixed-width repack: every 17 bits -> 11 trits, final group zero-padded."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size == 0:
        return np.zeros(0, dtype=np.uint8)
    groups = -(-bits.size // BITS_PER_GROUP)
    padded = np.zeros(groups * BITS_PER_GROUP, dtype=np.int64)
    padded[: bits.size] = bits
    vals = padded.reshape(groups, BITS_PER_GROUP) @ _POW2
    digits = (vals[:, None] // _POW3) % 3
    return digits.astype(np.uint8).ravel()


def trits_to_bits(trits):
    """Inverse of bits_to_trits (11 trits -> 17 bits per group)."""
    trits = np.asarray(trits, dtype=np.int64).ravel()
    if trits.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if trits.size % TRITS_PER_GROUP:
        raise DnapixError("trit stream must be a multiple of 11")
    vals = trits.reshape(-1, TRITS_PER_GROUP) @ _POW3
    vals = vals & ((1 << BITS_PER_GROUP) - 1)  # corrupt groups caught by CRC
    bits = (vals[:, None] >> np.arange(BITS_PER_GROUP - 1, -1, -1)) & 1
    return bits.astype(np.uint8).ravel()


def trits_to_nt(trits, prev="A"):
    """Rotational code: each trit picks one of the 3 bases != previous base."""
    trits = np.asarray(trits, dtype=np.uint8)
    if trits.size and trits.max() > 2:
        raise DnapixError("trit symbols must be in {0,1,2}")
    prev_code = seq.as_codes(prev)[0] if isinstance(prev, str) else int(prev)
    steps = trits.astype(np.int64) + 1
    codes = (prev_code + np.cumsum(steps)) % 4
    return seq.decode_seq(codes.astype(np.uint8))


def nt_to_trits(nt, prev="A"):
    """Inverse rotational code; adjacent equal bases are malformed."""
    codes = seq.as_codes(nt)
    prev_code = seq.as_codes(prev)[0] if isinstance(prev, str) else int(prev)
    shifted = np.concatenate([[prev_code], codes[:-1]]).astype(np.int64)
    trits = (codes.astype(np.int64) - shifted - 1) % 4
    if trits.size and trits.max() > 2:
        raise MalformedAlphabet("adjacent duplicate base in rotational code")
    return trits.astype(np.uint8)


def _trit_rows_to_codes(trits_2d):
    steps = trits_2d.astype(np.int64) + 1
    return ((_INITIAL_BASE + np.cumsum(steps, axis=1)) % 4).astype(np.uint8)


def _codes_to_trit_rows(codes_2d):
    shifted = np.empty_like(codes_2d, dtype=np.int64)
    shifted[:, 0] = _INITIAL_BASE
    shifted[:, 1:] = codes_2d[:, :-1]
    trits = (codes_2d.astype(np.int64) - shifted - 1) % 4
    bad = trits.max(axis=1) > 2
    return trits.astype(np.uint8), bad


# ---------------------------------------------------------------------------
# header packing


def _num_to_bits(vals, width):
    vals = np.asarray(vals, dtype=np.int64)
    return ((vals[:, None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8)


def _bits_to_num(bits_2d):
    width = bits_2d.shape[1]
    return (bits_2d.astype(np.int64) @ (1 << np.arange(width - 1, -1, -1))).astype(
        np.int64
    )


def _assemble_bits(layer_tags, block_indices, parity_flags, payloads, seeds):
    n = payloads.shape[0]
    bits = np.zeros((n, BLOCK_TOTAL_BITS), dtype=np.uint8)
    bits[:, 0:8] = _num_to_bits(layer_tags, 8)
    bits[:, 8:32] = _num_to_bits(block_indices, 24)
    bits[:, 32] = np.asarray(parity_flags, dtype=np.uint8)
    bits[:, _SEED_LO:_SEED_HI] = _num_to_bits(seeds, 8)
    bits[:, HEADER_BITS:] = payloads
    crc = _block_crc(bits)
    bits[:, _CRC_LO:_CRC_HI] = _num_to_bits(crc, 16)
    return bits


def _gc_windows_ok(codes_2d, cfg):
    w = cfg.gc_window
    is_gc = ((codes_2d == seq.C) | (codes_2d == seq.G)).astype(np.int32)
    csum = np.cumsum(is_gc, axis=1)
    csum = np.concatenate([np.zeros((codes_2d.shape[0], 1), np.int32), csum], axis=1)
    counts = csum[:, w:] - csum[:, :-w]
    lo = int(np.ceil(cfg.gc_min * w - 1e-9))
    hi = int(np.floor(cfg.gc_max * w + 1e-9))
    return ((counts >= lo) & (counts <= hi)).all(axis=1)


def encode_blocks(payloads, layer_tags, block_indices, parity_flags, cfg=None):
    """Vectorized block encoder.

    payloads: (N, BLOCK_PAYLOAD_BITS) uint8 bit matrix.  Returns the code
    matrix (N, 148) uint8 and the chosen scrambler seeds (N,).
    """
    cfg = cfg or ConstraintConfig()
    payloads = np.asarray(payloads, dtype=np.uint8)
    if payloads.ndim != 2 or payloads.shape[1] != BLOCK_PAYLOAD_BITS:
        raise DnapixError(
            f"payload matrix must be (N, {BLOCK_PAYLOAD_BITS}), got {payloads.shape}"
        )
    n = payloads.shape[0]
    layer_tags = np.broadcast_to(np.asarray(layer_tags, dtype=np.int64), (n,))
    block_indices = np.broadcast_to(np.asarray(block_indices, dtype=np.int64), (n,))
    parity_flags = np.broadcast_to(np.asarray(parity_flags, dtype=np.int64), (n,))

    out_codes = np.zeros((n, BLOCK_NT), dtype=np.uint8)
    out_seeds = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    for s in range(256):
        if pending.size == 0:
            break
        bits = _assemble_bits(
            layer_tags[pending],
            block_indices[pending],
            parity_flags[pending],
            payloads[pending],
            np.full(pending.size, s),
        )
        bits ^= _MASKS[s][None, :]
        trits = np.zeros((pending.size, BLOCK_NT), dtype=np.uint8)
        trits[:, : GROUPS_PER_BLOCK * TRITS_PER_GROUP] = bits_to_trits(
            bits.ravel()
        ).reshape(pending.size, -1)
        codes = _trit_rows_to_codes(trits)
        ok = _gc_windows_ok(codes, cfg)
        done = pending[ok]
        out_codes[done] = codes[ok]
        out_seeds[done] = s
        pending = pending[~ok]
    if pending.size:
        raise NoValidSeed(f"{pending.size} blocks failed all 256 scrambler seeds")
    return out_codes, out_seeds


def decode_blocks(codes_2d, cfg=None):
    """Vectorized inverse of encode_blocks.

    Returns (layer_tags, block_indices, parity_flags, seeds, payload_bits,
    ok_mask); rows failing CRC or the rotational-code adjacency rule have
    ok_mask False.
    """
    codes_2d = np.asarray(codes_2d, dtype=np.uint8)
    if codes_2d.ndim != 2 or codes_2d.shape[1] != BLOCK_NT:
        raise MalformedAlphabet(f"expected (N, {BLOCK_NT}) code matrix")
    n = codes_2d.shape[0]
    trits, bad = _codes_to_trit_rows(codes_2d)
    trits_used = trits[:, : GROUPS_PER_BLOCK * TRITS_PER_GROUP]
    safe = np.where(bad[:, None], 0, trits_used)
    bits = trits_to_bits(safe.ravel()).reshape(n, BLOCK_TOTAL_BITS)
    seeds = _bits_to_num(bits[:, _SEED_LO:_SEED_HI])
    bits = bits ^ _MASKS[seeds]
    bits[:, _SEED_LO:_SEED_HI] ^= 0  # seed field was never masked
    stored_crc = _bits_to_num(bits[:, _CRC_LO:_CRC_HI])
    calc_crc = _block_crc(bits)
    ok = (~bad) & (stored_crc == calc_crc.astype(np.int64))
    layer_tags = _bits_to_num(bits[:, 0:8])
    block_indices = _bits_to_num(bits[:, 8:32])
    parity_flags = bits[:, 32].astype(bool)
    payloads = bits[:, HEADER_BITS:]
    return layer_tags, block_indices, parity_flags, seeds, payloads, ok


# ---------------------------------------------------------------------------
# scalar convenience API


def _pad_payload(payload_bits):
    payload_bits = np.asarray(payload_bits, dtype=np.uint8).ravel()
    if payload_bits.size > BLOCK_PAYLOAD_BITS:
        raise DnapixError(
            f"payload of {payload_bits.size} bits exceeds capacity {BLOCK_PAYLOAD_BITS}"
        )
    out = np.zeros(BLOCK_PAYLOAD_BITS, dtype=np.uint8)
    out[: payload_bits.size] = payload_bits
    return out


def _header_crc(layer_tag, block_index, parity_flag, seed, payload_row):
    bits = _assemble_bits(
        np.array([layer_tag]),
        np.array([block_index]),
        np.array([int(parity_flag)]),
        payload_row[None, :],
        np.array([seed]),
    )
    return int(_bits_to_num(bits[:, _CRC_LO:_CRC_HI])[0])


def encode_block(payload_bits, layer_tag=0, block_index=0, parity_flag=False, cfg=None):
    payload = _pad_payload(payload_bits)
    codes, seeds = encode_blocks(
        payload[None, :], [layer_tag], [block_index], [int(parity_flag)], cfg
    )
    header = BlockHeader(
        layer_tag=layer_tag,
        block_index=block_index,
        parity_flag=bool(parity_flag),
        scrambler_seed=int(seeds[0]),
        crc=_header_crc(layer_tag, block_index, parity_flag, int(seeds[0]), payload),
    )
    return OligoBlock(
        header=header,
        payload_bits=payload,
        nt_sequence=seq.decode_seq(codes[0]),
    )


def decode_block(nt_sequence, cfg=None):
    codes = seq.as_codes(nt_sequence)
    if codes.size != BLOCK_NT:
        raise MalformedAlphabet(f"block must be {BLOCK_NT} nt, got {codes.size}")
    tags, idxs, flags, seeds, payloads, ok = decode_blocks(codes[None, :], cfg)
    if not ok[0]:
        _, bad = _codes_to_trit_rows(codes[None, :])
        if bad[0]:
            raise MalformedAlphabet("adjacent duplicate base in rotational code")
        raise CrcMismatch("block checksum failed")
    header = BlockHeader(
        layer_tag=int(tags[0]),
        block_index=int(idxs[0]),
        parity_flag=bool(flags[0]),
        scrambler_seed=int(seeds[0]),
        crc=_header_crc(int(tags[0]), int(idxs[0]), bool(flags[0]), int(seeds[0]), payloads[0]),
    )
    return header, payloads[0]


def validate_constraints(nt_sequence, cfg=None):
    """Report-style constraint check: homopolymer runs and GC windows."""
    cfg = cfg or ConstraintConfig()
    codes = seq.as_codes(nt_sequence)
    report = ConstraintReport()
    for pos, run in seq.homopolymer_runs(codes):
        if run > cfg.homopolymer_max:
            report.homopolymer_violations.append((pos, run))
    if codes.size >= cfg.gc_window:
        fracs = seq.gc_window_fractions(codes, cfg.gc_window)
        for start in np.flatnonzero((fracs < cfg.gc_min - 1e-12) | (fracs > cfg.gc_max + 1e-12)):
            report.gc_violations.append((int(start), float(fracs[start])))
    elif codes.size:
        frac = seq.gc_fraction(codes)
        if frac < cfg.gc_min - 1e-12 or frac > cfg.gc_max + 1e-12:
            report.gc_violations.append((0, frac))
    return report


# ---------------------------------------------------------------------------
# parity groups

DEFAULT_PARITY_GROUP = 8


def xor_payloads(payloads):
    """Bitwise XOR of equal-length (zero-padded) payload bit vectors."""
    if not len(payloads):
        raise DnapixError("empty parity group")
    acc = np.zeros(BLOCK_PAYLOAD_BITS, dtype=np.uint8)
    for p in payloads:
        acc ^= _pad_payload(p)
    return acc


def build_parity(member_payloads, group_index, layer_tag, parity_base, cfg=None):
    """Parity block for one group; block_index = parity_base + group_index."""
    parity_payload = xor_payloads(member_payloads)
    return encode_block(
        parity_payload,
        layer_tag=layer_tag,
        block_index=parity_base + group_index,
        parity_flag=True,
        cfg=cfg,
    )


def recover_with_parity(present_payloads, parity_payload):
    """XOR the parity payload with the surviving members to restore the one
    missing payload."""
    return xor_payloads(list(present_payloads) + [parity_payload])


# ---------------------------------------------------------------------------
# layer-level chunking


def layer_to_payload_matrix(data: bytes):
    """Prefix a u32 byte length, split into block-sized bit rows (zero-padded)."""
    length = np.array([len(data)], dtype=">u4").tobytes()
    bits = np.unpackbits(np.frombuffer(length + data, dtype=np.uint8))
    n_blocks = max(1, -(-bits.size // BLOCK_PAYLOAD_BITS))
    mat = np.zeros((n_blocks, BLOCK_PAYLOAD_BITS), dtype=np.uint8)
    mat.ravel()[: bits.size] = bits
    return mat


def payload_matrix_to_layer(mat):
    """Inverse of layer_to_payload_matrix; rows must be in block-index order."""
    bits = np.asarray(mat, dtype=np.uint8).ravel()
    if bits.size < 32:
        raise DnapixError("payload stream shorter than its length prefix")
    nbytes = int(_bits_to_num(bits[None, :32])[0])
    body = np.packbits(bits[32:])
    if body.size < nbytes:
        raise DnapixError("payload stream shorter than its recorded length")
    return body[:nbytes].tobytes()


def encode_layer_blocks(data: bytes, layer_tag: int, cfg=None, parity_group=DEFAULT_PARITY_GROUP):
    """Encode one layer bitstream into data + parity block code rows.

    Returns (codes, meta) where codes is ((n_data + n_parity), 148) uint8 and
    meta records n_data and the parity group size.
    """
    cfg = cfg or ConstraintConfig()
    mat = layer_to_payload_matrix(data)
    n_data = mat.shape[0]
    n_groups = -(-n_data // parity_group)
    parity = np.zeros((n_groups, BLOCK_PAYLOAD_BITS), dtype=np.uint8)
    for g in range(n_groups):
        chunk = mat[g * parity_group : (g + 1) * parity_group]
        parity[g] = np.bitwise_xor.reduce(chunk, axis=0)
    all_payloads = np.concatenate([mat, parity], axis=0)
    indices = np.arange(n_data + n_groups)
    flags = np.concatenate([np.zeros(n_data, np.int64), np.ones(n_groups, np.int64)])
    codes, _seeds = encode_blocks(all_payloads, layer_tag, indices, flags, cfg)
    return codes, {"n_data": n_data, "parity_group": parity_group, "n_parity": n_groups}
