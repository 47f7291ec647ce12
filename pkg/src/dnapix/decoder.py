"""Noisy reads back to layer payloads: segmentation, consensus, parity repair.

Accepted reads are cut into block candidates at adapter anchors, candidates
are pooled per block index (CRC-passing decodes vote on the index, the rest
inherit it from their slot position), a plurality consensus resolves the
per-block sequence, and XOR parity restores at most one erased block per
group.  Failures surface as IrrecoverableLayer, never as a silently wrong
payload: the CRC guards every decoded block.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import pyramid, seq, transcode
from .align import (
    OP_DELETE,
    OP_MATCH,
    global_align_ops,
    levenshtein,
    semiglobal_end_distances,
)
from .exceptions import IrrecoverableLayer, NoAdapterFound

SEGMENT_TOLERANCE = 8  # nt of indel drift allowed on a 148-nt candidate
ADAPTER_THRESHOLD = 0.25


@dataclass
class BlockObservation:
    slot: int  # positional slot inferred from the anchor location
    codes: np.ndarray
    read_id: str
    block_index: int = None  # assigned once a CRC-passing decode votes


@dataclass
class LayerDecodeResult:
    payload: bytes
    block_status: dict  # index -> "ok" | "parity-recovered"
    reads_used: int
    consensus_failures: int = 0


# ---------------------------------------------------------------------------
# segmentation


def _exact_hits(read, pattern):
    if read.size < pattern.size:
        return np.zeros(0, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(read, pattern.size)
    return np.flatnonzero((windows == pattern).all(axis=1))


def _aligned_hits(read, pattern, limit):
    """(start, end, dist) spans of approximate pattern occurrences."""
    ends = semiglobal_end_distances(pattern, read)
    hits = []
    j = 0
    n = ends.size
    while j < n:
        if ends[j] > limit:
            j += 1
            continue
        win_end = min(n, j + pattern.size)
        local = j + int(np.argmin(ends[j:win_end]))
        dist = int(ends[local])
        end = local + 1
        lo = max(0, end - pattern.size - limit)
        rev = semiglobal_end_distances(pattern[::-1], read[lo:end][::-1])
        start = end - (int(np.argmin(rev)) + 1)
        hits.append((start, end, dist))
        j = end + pattern.size // 2
    return hits


def segment_read(noisy_codes, adapter, reference, tol=SEGMENT_TOLERANCE, read_id=""):
    """Slice a read into per-slot block candidates at adapter anchors.

    Anchors snap to the molecule's slot grid (reference + k * unit); the
    best-scoring anchor wins each slot, which suppresses chance adapter
    look-alikes inside payload blocks.
    """
    read = seq.as_codes(noisy_codes)
    ada = seq.as_codes(adapter)
    ref_len = seq.as_codes(reference).size
    limit = math.floor(ADAPTER_THRESHOLD * ada.size)
    unit = ada.size + transcode.BLOCK_NT

    expected = max(1, (read.size - ref_len + tol) // unit)
    exact = _exact_hits(read, ada)
    if exact.size >= expected and (np.diff(exact) >= unit - tol).all():
        spans = [(int(s), int(s) + ada.size, 0) for s in exact]
    else:
        spans = _aligned_hits(read, ada, limit)
    if not spans:
        raise NoAdapterFound("no adapter anchor in read")

    by_slot = {}
    for start, end, dist in spans:
        slot = int(round((start - ref_len) / unit))
        if slot < 0:
            slot = 0
        prev = by_slot.get(slot)
        if prev is None or dist < prev[2]:
            by_slot[slot] = (start, end, dist)

    out = []
    slots = sorted(by_slot)
    for i, slot in enumerate(slots):
        _start, end, _dist = by_slot[slot]
        if i + 1 < len(slots) and slots[i + 1] == slot + 1:
            nxt = by_slot[slots[i + 1]][0]
        else:
            nxt = min(read.size, end + transcode.BLOCK_NT + tol // 2)
        cand = read[end:nxt]
        if not (transcode.BLOCK_NT - tol <= cand.size <= transcode.BLOCK_NT + tol):
            continue
        out.append(BlockObservation(slot=slot, codes=cand, read_id=read_id))
    if not out:
        raise NoAdapterFound("adapters found but no usable block candidate")
    return out


# ---------------------------------------------------------------------------
# consensus


def _as_rows(observations):
    return [
        o.codes if isinstance(o, BlockObservation) else seq.as_codes(o)
        for o in observations
    ]


def _vote(rows, template):
    """Align every row against the template and tally per-position votes."""
    L = template.size
    base_votes = np.zeros((L, 4), dtype=np.int32)
    del_votes = np.zeros(L, dtype=np.int32)
    ins_votes = np.zeros((L + 1, 4), dtype=np.int32)
    for row in rows:
        if row.size == L and np.array_equal(row, template):
            base_votes[np.arange(L), row] += 1
            continue
        i = j = 0
        for op in global_align_ops(template, row):
            if op == OP_MATCH:
                base_votes[i, row[j]] += 1
                i += 1
                j += 1
            elif op == OP_DELETE:
                del_votes[i] += 1
                i += 1
            else:  # OP_INSERT
                ins_votes[i, row[j]] += 1
                j += 1
    return base_votes, del_votes, ins_votes


def _decisions(rows, template):
    """Per-position (chosen, alternatives) decision list from plurality votes.

    Each decision emits zero or more bases; alternatives are the near-tie
    options (vote margin <= 1) a CRC-guided rescue may branch on.
    """
    base_votes, del_votes, ins_votes = _vote(rows, template)
    n = len(rows)
    half = n / 2.0
    L = template.size
    decisions = []
    for i in range(L + 1):
        ins_total = int(ins_votes[i].sum())
        if ins_total:
            top = int(np.argmax(ins_votes[i]))
            chosen = (top,) if ins_total > half else ()
            alts = []
            if abs(ins_total - half) <= 1:
                alts.append(() if chosen else (top,))
            decisions.append((chosen, alts))
        if i < L:
            dv = int(del_votes[i])
            keep = dv <= half
            top = int(np.argmax(base_votes[i]))
            chosen = (top,) if keep else ()
            alts = []
            if dv and abs(dv - half) <= 1:
                alts.append(() if keep else (top,))
            if keep:
                masked = base_votes[i].copy()
                masked[top] = -1
                second = int(np.argmax(masked))
                if 0 < base_votes[i][second] >= base_votes[i][top] - 1:
                    alts.append((second,))
            decisions.append((chosen, alts))
    return decisions


def consensus(observations):
    """Plurality consensus over aligned block candidates.

    Ties break toward the lexicographically smallest base; a single
    observation is returned as-is.
    """
    if not observations:
        raise IrrecoverableLayer([])
    rows = _as_rows(observations)
    if len(rows) == 1:
        return rows[0].copy()
    template = min(rows, key=lambda r: (abs(r.size - transcode.BLOCK_NT), r.tobytes()))
    decisions = _decisions(rows, template)
    out = [b for chosen, _ in decisions for b in chosen]
    return np.array(out, dtype=np.uint8)


def rescue_block(observations, index, max_branches=3, max_candidates=512):
    """CRC-arbitrated consensus: branch on near-tie vote positions.

    Tries the plain consensus first, then every combination of up to
    ``max_branches`` alternative decisions (and every observation as an
    alternate template), returning (layer_tag, parity_flag, payload) for the
    first candidate whose CRC passes with the expected block index, else None.
    """
    from itertools import combinations

    rows = _as_rows(observations)
    templates = sorted(
        {r.tobytes(): r for r in rows}.values(),
        key=lambda r: (abs(r.size - transcode.BLOCK_NT), r.tobytes()),
    )
    seen = set()
    candidates = []

    def push(codes):
        if codes.size != transcode.BLOCK_NT:
            return
        key = codes.tobytes()
        if key not in seen:
            seen.add(key)
            candidates.append(codes)

    for template in templates:
        decisions = _decisions(rows, template)
        push(np.array([b for c, _ in decisions for b in c], dtype=np.uint8))
        branch_points = [
            (pos, alt)
            for pos, (_c, alts) in enumerate(decisions)
            for alt in alts
        ]
        for r in range(1, max_branches + 1):
            for combo in combinations(branch_points, r):
                if len({p for p, _ in combo}) != r:
                    continue
                picked = dict(combo)
                out = []
                for pos, (chosen, _alts) in enumerate(decisions):
                    out.extend(picked.get(pos, chosen))
                push(np.array(out, dtype=np.uint8))
                if len(candidates) >= max_candidates:
                    break
            if len(candidates) >= max_candidates:
                break
        if len(candidates) >= max_candidates:
            break

    if not candidates:
        return None
    mat = np.stack(candidates)
    tags, idxs, flags, _s, payloads, ok = transcode.decode_blocks(mat)
    hit = np.flatnonzero(ok & (idxs == index))
    if hit.size == 0:
        return None
    row = int(hit[0])
    return int(tags[row]), bool(flags[row]), payloads[row]


# ---------------------------------------------------------------------------
# layer decode


def _collect_observations(reads, adapter, reference, tol):
    observations = []
    usable_reads = 0
    for read_id, codes in sorted(reads, key=lambda r: r[0]):
        try:
            obs = segment_read(codes, adapter, reference, tol=tol, read_id=read_id)
        except NoAdapterFound:
            continue
        usable_reads += 1
        observations.append(obs)
    return observations, usable_reads


def _assign_indices(per_read_obs, candidate_bases=()):
    """Decode exact-length candidates in one batch; CRC winners vote on the
    index base of their read, the rest inherit index = base + slot.

    Reads without any CRC-passing block get a second chance: their
    observations are matched by edit distance against representatives of the
    already-anchored groups at each legal molecule base offset.
    """
    flat = [o for obs in per_read_obs for o in obs]
    exact = [o for o in flat if o.codes.size == transcode.BLOCK_NT]
    decoded = {}
    if exact:
        mat = np.stack([o.codes for o in exact])
        tags, idxs, flags, _seeds, payloads, ok = transcode.decode_blocks(mat)
        for row, o in enumerate(exact):
            if ok[row]:
                o.block_index = int(idxs[row])
                decoded[id(o)] = (int(tags[row]), bool(flags[row]), payloads[row])
    unanchored = []
    for obs in per_read_obs:
        bases = [o.block_index - o.slot for o in obs if o.block_index is not None]
        if not bases:
            unanchored.append(obs)
            continue
        vals, counts = np.unique(np.array(bases), return_counts=True)
        base = int(vals[np.argmax(counts)])
        for o in obs:
            if o.block_index is None:
                o.block_index = base + o.slot

    if unanchored and candidate_bases:
        reps = {}
        for o in flat:
            if o.block_index is not None and (
                o.block_index not in reps or id(o) in decoded
            ):
                reps[o.block_index] = o.codes
        limit = transcode.BLOCK_NT // 4
        for obs in unanchored:
            best_base, best_score = None, None
            for base in candidate_bases:
                dists = [
                    levenshtein(o.codes, reps[base + o.slot], limit)
                    for o in obs
                    if base + o.slot in reps
                ]
                if not dists:
                    continue
                score = sum(dists) / len(dists)
                if best_score is None or score < best_score:
                    best_base, best_score = base, score
            if best_base is not None and best_score <= limit / 2:
                for o in obs:
                    if o.block_index is None:
                        o.block_index = best_base + o.slot
    return flat, decoded


def decode_layer(
    reads,
    reference,
    expected_blocks,
    adapter=None,
    cfg=None,
    parity_group=transcode.DEFAULT_PARITY_GROUP,
    tol=SEGMENT_TOLERANCE,
    blocks_per_molecule=None,
):
    """Reassemble one layer payload from its accepted reads.

    ``expected_blocks`` is the data block count (parity and pad blocks are
    recognized by flag/tag).  Raises IrrecoverableLayer when some parity
    group has lost more than one block.
    """
    from .pool import DEFAULT_ADAPTER, DEFAULT_BLOCKS_PER_MOLECULE

    adapter = adapter if adapter is not None else DEFAULT_ADAPTER
    bpm = blocks_per_molecule or DEFAULT_BLOCKS_PER_MOLECULE
    n_data = int(expected_blocks)
    n_parity = -(-n_data // parity_group)
    n_slots = -(-(n_data + n_parity) // bpm) * bpm
    per_read_obs, usable_reads = _collect_observations(reads, adapter, reference, tol)
    flat, decoded = _assign_indices(per_read_obs, range(0, n_slots, bpm))

    groups = {}
    for o in flat:
        if o.block_index is None:
            continue
        groups.setdefault(o.block_index, []).append(o)

    payloads = {}
    status = {}
    consensus_failures = 0
    for index in sorted(groups):
        if not 0 <= index < n_data + n_parity:
            continue  # pad block or misassigned index outside the layer
        grp = groups[index]
        clean = next((decoded[id(o)] for o in grp if id(o) in decoded), None)
        if clean is not None:
            tag, flag, payload = clean
        else:
            rescued = rescue_block(grp, index)
            if rescued is None:
                consensus_failures += 1
                continue
            tag, flag, payload = rescued
        if tag == transcode.PAD_LAYER_TAG:
            continue
        payloads[index] = payload
        status[index] = "ok"

    # parity repair: one erasure per group
    irrecoverable = []
    for g in range(n_parity):
        members = list(range(g * parity_group, min((g + 1) * parity_group, n_data)))
        lost = [i for i in members if i not in payloads]
        if not lost:
            continue
        parity_index = n_data + g
        if len(lost) == 1 and parity_index in payloads:
            present = [payloads[i] for i in members if i in payloads]
            payloads[lost[0]] = transcode.recover_with_parity(
                present, payloads[parity_index]
            )
            status[lost[0]] = "parity-recovered"
        else:
            irrecoverable.extend(lost)
    if irrecoverable:
        raise IrrecoverableLayer(irrecoverable)

    mat = np.stack([payloads[i] for i in range(n_data)])
    data = transcode.payload_matrix_to_layer(mat)
    return LayerDecodeResult(
        payload=data,
        block_status={i: status[i] for i in range(n_data)},
        reads_used=usable_reads,
        consensus_failures=consensus_failures,
    )


def progressive_reconstruct(layer_payloads, image_id="img", original=None):
    """Rebuild the image from decoded layer payloads 0..K; report PSNR when
    the original is supplied."""
    bitstreams = []
    for k, payload in enumerate(layer_payloads):
        bitstreams.append(
            pyramid.LayerBitstream(
                image_id=image_id, layer_index=k, payload=payload, decoded_dims=(0, 0)
            )
        )
    img = pyramid.reconstruct(bitstreams)
    quality = None
    if original is not None and (original.width, original.height) == (
        img.width,
        img.height,
    ):
        quality = pyramid.psnr(original, img)
    return img, quality
