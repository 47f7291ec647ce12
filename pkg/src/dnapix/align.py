"""Edit-distance kernels used by the sequencer simulator and the read segmenter.

Sequences are numpy uint8 arrays of base codes 0..3 (see :mod:`dnapix.seq`).
Each kernel has a numba @njit implementation and a pure-numpy fallback; the
active backend is chosen at import time from the DNAPIX_NUMBA env variable
("0"/"false" disables JIT).  ``BACKEND`` reports which one is live.
"""

import os

import numpy as np

_FLAG = os.environ.get("DNAPIX_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "off")

if _WANT_NUMBA:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# loop implementations (jitted when numba is enabled)


def _semiglobal_distance_loop(pattern, text, limit):
    m = pattern.size
    n = text.size
    prev = np.zeros(n + 1, dtype=np.int32)
    cur = np.zeros(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        cur[0] = i
        row_min = i
        p = pattern[i - 1]
        for j in range(1, n + 1):
            cost = prev[j - 1]
            if text[j - 1] != p:
                cost += 1
            d = prev[j] + 1
            if d < cost:
                cost = d
            e = cur[j - 1] + 1
            if e < cost:
                cost = e
            cur[j] = cost
            if cost < row_min:
                row_min = cost
        if row_min > limit:
            return limit + 1
        prev, cur = cur, prev
    best = limit + 1
    for j in range(n + 1):
        if prev[j] < best:
            best = prev[j]
    return best


def _semiglobal_end_distances_loop(pattern, text):
    m = pattern.size
    n = text.size
    prev = np.zeros(n + 1, dtype=np.int32)
    cur = np.zeros(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        cur[0] = i
        p = pattern[i - 1]
        for j in range(1, n + 1):
            cost = prev[j - 1]
            if text[j - 1] != p:
                cost += 1
            d = prev[j] + 1
            if d < cost:
                cost = d
            e = cur[j - 1] + 1
            if e < cost:
                cost = e
            cur[j] = cost
        prev, cur = cur, prev
    return prev[1:].copy()


def _prefix_distance_loop(pattern, text, limit):
    m = pattern.size
    n = text.size
    prev = np.arange(n + 1, dtype=np.int32)
    cur = np.zeros(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        cur[0] = i
        row_min = i
        p = pattern[i - 1]
        for j in range(1, n + 1):
            cost = prev[j - 1]
            if text[j - 1] != p:
                cost += 1
            d = prev[j] + 1
            if d < cost:
                cost = d
            e = cur[j - 1] + 1
            if e < cost:
                cost = e
            cur[j] = cost
            if cost < row_min:
                row_min = cost
        if row_min > limit:
            return limit + 1
        prev, cur = cur, prev
    best = limit + 1
    for j in range(n + 1):
        if prev[j] < best:
            best = prev[j]
    return best


def _levenshtein_loop(a, b, limit):
    m = a.size
    n = b.size
    if abs(m - n) > limit:
        return limit + 1
    prev = np.arange(n + 1, dtype=np.int32)
    cur = np.zeros(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        cur[0] = i
        row_min = i
        x = a[i - 1]
        for j in range(1, n + 1):
            cost = prev[j - 1]
            if b[j - 1] != x:
                cost += 1
            d = prev[j] + 1
            if d < cost:
                cost = d
            e = cur[j - 1] + 1
            if e < cost:
                cost = e
            cur[j] = cost
            if cost < row_min:
                row_min = cost
        if row_min > limit:
            return limit + 1
        prev, cur = cur, prev
    if prev[n] > limit:
        return limit + 1
    return prev[n]


def _global_align_matrix_loop(a, b):
    m = a.size
    n = b.size
    dp = np.zeros((m + 1, n + 1), dtype=np.int32)
    for j in range(n + 1):
        dp[0, j] = j
    for i in range(1, m + 1):
        dp[i, 0] = i
        x = a[i - 1]
        for j in range(1, n + 1):
            cost = dp[i - 1, j - 1]
            if b[j - 1] != x:
                cost += 1
            d = dp[i - 1, j] + 1
            if d < cost:
                cost = d
            e = dp[i, j - 1] + 1
            if e < cost:
                cost = e
            dp[i, j] = cost
    return dp


if NUMBA_ENABLED:
    _semiglobal_distance_impl = njit(cache=True)(_semiglobal_distance_loop)
    _semiglobal_end_distances_impl = njit(cache=True)(_semiglobal_end_distances_loop)
    _prefix_distance_impl = njit(cache=True)(_prefix_distance_loop)
    _levenshtein_impl = njit(cache=True)(_levenshtein_loop)
    _global_align_matrix_impl = njit(cache=True)(_global_align_matrix_loop)


# ---------------------------------------------------------------------------
# numpy fallbacks (row-vectorized; the left-to-right insertion dependency is
# resolved with the min-scan trick: min_k(base_k + (j-k)) via minimum.accumulate)


def _scan_row(base):
    j = np.arange(base.size, dtype=np.int32)
    return np.minimum.accumulate(base - j) + j


def _semiglobal_rows_np(pattern, text):
    n = text.size
    prev = np.zeros(n + 1, dtype=np.int32)
    for i in range(1, pattern.size + 1):
        base = np.empty(n + 1, dtype=np.int32)
        base[0] = i
        base[1:] = np.minimum(prev[:-1] + (text != pattern[i - 1]), prev[1:] + 1)
        prev = _scan_row(base)
        yield prev


def _semiglobal_distance_np(pattern, text, limit):
    prev = np.zeros(text.size + 1, dtype=np.int32)
    for prev in _semiglobal_rows_np(pattern, text):
        if prev.min() > limit:
            return limit + 1
    return int(min(prev.min(), limit + 1))


def _semiglobal_end_distances_np(pattern, text):
    prev = np.zeros(text.size + 1, dtype=np.int32)
    for prev in _semiglobal_rows_np(pattern, text):
        pass
    return prev[1:].copy()


def _prefix_distance_np(pattern, text, limit):
    prev = np.arange(text.size + 1, dtype=np.int32)
    for i in range(1, pattern.size + 1):
        base = np.empty(text.size + 1, dtype=np.int32)
        base[0] = i
        base[1:] = np.minimum(prev[:-1] + (text != pattern[i - 1]), prev[1:] + 1)
        prev = _scan_row(base)
        if prev.min() > limit:
            return limit + 1
    return int(min(prev.min(), limit + 1))


def _levenshtein_np(a, b, limit):
    if abs(a.size - b.size) > limit:
        return limit + 1
    n = b.size
    prev = np.arange(n + 1, dtype=np.int32)
    for i in range(1, a.size + 1):
        base = np.empty(n + 1, dtype=np.int32)
        base[0] = i
        base[1:] = np.minimum(prev[:-1] + (b != a[i - 1]), prev[1:] + 1)
        prev = _scan_row(base)
        if prev.min() > limit:
            return limit + 1
    return int(min(prev[n], limit + 1))


def _global_align_matrix_np(a, b):
    m, n = a.size, b.size
    dp = np.zeros((m + 1, n + 1), dtype=np.int32)
    dp[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        base = np.empty(n + 1, dtype=np.int32)
        base[0] = i
        base[1:] = np.minimum(dp[i - 1, :-1] + (b != a[i - 1]), dp[i - 1, 1:] + 1)
        dp[i] = _scan_row(base)
    return dp


if not NUMBA_ENABLED:
    _semiglobal_distance_impl = _semiglobal_distance_np
    _semiglobal_end_distances_impl = _semiglobal_end_distances_np
    _prefix_distance_impl = _prefix_distance_np
    _levenshtein_impl = _levenshtein_np
    _global_align_matrix_impl = _global_align_matrix_np


# ---------------------------------------------------------------------------
# public API


def semiglobal_distance(pattern, text, limit=None):
    """Best edit distance of ``pattern`` matched anywhere inside ``text``.

    Free end gaps on the text side only.  With ``limit`` set, returns
    ``limit + 1`` as soon as the distance provably exceeds it.
    """
    pattern = np.ascontiguousarray(pattern, dtype=np.uint8)
    text = np.ascontiguousarray(text, dtype=np.uint8)
    if pattern.size == 0:
        return 0
    if text.size == 0:
        return pattern.size
    if limit is None:
        limit = pattern.size
    return int(_semiglobal_distance_impl(pattern, text, int(limit)))


def semiglobal_end_distances(pattern, text):
    """For every end position j in text (1-based, returned 0-based), the best
    edit distance of a full-pattern match ending exactly at j."""
    pattern = np.ascontiguousarray(pattern, dtype=np.uint8)
    text = np.ascontiguousarray(text, dtype=np.uint8)
    if text.size == 0:
        return np.zeros(0, dtype=np.int32)
    return np.asarray(_semiglobal_end_distances_impl(pattern, text))


def prefix_distance(pattern, text, limit=None):
    """Best edit distance of ``pattern`` against a prefix of ``text``.

    Anchored at the start of the text (skipped leading text costs), free end
    gap on the text side only — the alignment used to recognize a reference
    sequence at the head of a read.  With ``limit`` set, returns ``limit + 1``
    as soon as the distance provably exceeds it.
    """
    pattern = np.ascontiguousarray(pattern, dtype=np.uint8)
    text = np.ascontiguousarray(text, dtype=np.uint8)
    if pattern.size == 0:
        return 0
    if limit is None:
        limit = pattern.size
    # a within-limit alignment never consumes more than m+limit text symbols
    text = text[: pattern.size + int(limit)]
    if text.size == 0:
        return int(min(pattern.size, limit + 1))
    return int(_prefix_distance_impl(pattern, text, int(limit)))


def levenshtein(a, b, limit=None):
    """Plain edit distance, with optional early-out ``limit``."""
    a = np.ascontiguousarray(a, dtype=np.uint8)
    b = np.ascontiguousarray(b, dtype=np.uint8)
    if limit is None:
        limit = max(a.size, b.size)
    if a.size == 0:
        return int(min(b.size, limit + 1))
    if b.size == 0:
        return int(min(a.size, limit + 1))
    return int(_levenshtein_impl(a, b, int(limit)))


# traceback op codes
OP_MATCH = 0  # consume one symbol of each
OP_DELETE = 1  # consume one symbol of `a` only
OP_INSERT = 2  # consume one symbol of `b` only


def global_align_ops(a, b):
    """Unit-cost global alignment of ``a`` against ``b``.

    Returns an int8 op sequence (OP_MATCH / OP_DELETE / OP_INSERT) walking
    both sequences front to back.  Deterministic tie-break: match, then
    delete, then insert.
    """
    a = np.ascontiguousarray(a, dtype=np.uint8)
    b = np.ascontiguousarray(b, dtype=np.uint8)
    dp = np.asarray(_global_align_matrix_impl(a, b))
    ops = []
    i, j = a.size, b.size
    while i > 0 or j > 0:
        here = dp[i, j]
        if i > 0 and j > 0 and here == dp[i - 1, j - 1] + (a[i - 1] != b[j - 1]):
            ops.append(OP_MATCH)
            i -= 1
            j -= 1
        elif i > 0 and here == dp[i - 1, j] + 1:
            ops.append(OP_DELETE)
            i -= 1
        else:
            ops.append(OP_INSERT)
            j -= 1
    ops.reverse()
    return np.array(ops, dtype=np.int8)
