"""Alignment kernels against brute-force dynamic-programming oracles."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnapix import align

seqs = st.lists(st.integers(0, 3), min_size=0, max_size=30).map(
    lambda xs: np.array(xs, dtype=np.uint8)
)
nonempty = st.lists(st.integers(0, 3), min_size=1, max_size=30).map(
    lambda xs: np.array(xs, dtype=np.uint8)
)


def oracle_levenshtein(a, b):
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dp[i][0] = i
    for j in range(n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            dp[i][j] = min(
                dp[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
                dp[i - 1][j] + 1,
                dp[i][j - 1] + 1,
            )
    return dp[m][n]


def oracle_semiglobal(p, t):
    # best match of p against any substring of t
    return min(
        oracle_levenshtein(p, t[i:j])
        for i in range(len(t) + 1)
        for j in range(i, len(t) + 1)
    )


def oracle_prefix(p, t):
    # anchored at text start, free end
    return min(oracle_levenshtein(p, t[:j]) for j in range(len(t) + 1))


@given(nonempty, seqs)
@settings(max_examples=150, deadline=None)
def test_levenshtein_matches_oracle(a, b):
    assert align.levenshtein(a, b) == oracle_levenshtein(list(a), list(b))


@given(nonempty, seqs)
@settings(max_examples=100, deadline=None)
def test_semiglobal_matches_oracle(p, t):
    assert align.semiglobal_distance(p, t) == oracle_semiglobal(list(p), list(t))


@given(nonempty, seqs)
@settings(max_examples=100, deadline=None)
def test_prefix_distance_matches_oracle(p, t):
    assert align.prefix_distance(p, t) == oracle_prefix(list(p), list(t))


@given(nonempty, nonempty)
@settings(max_examples=100, deadline=None)
def test_levenshtein_symmetric(a, b):
    assert align.levenshtein(a, b) == align.levenshtein(b, a)


@given(nonempty)
@settings(max_examples=50, deadline=None)
def test_identity_distances(a):
    assert align.levenshtein(a, a) == 0
    assert align.semiglobal_distance(a, a) == 0
    assert align.prefix_distance(a, a) == 0


def test_limit_early_out():
    a = np.zeros(20, dtype=np.uint8)
    b = np.full(20, 3, dtype=np.uint8)
    assert align.levenshtein(a, b, limit=5) == 6
    assert align.semiglobal_distance(a, b, limit=5) == 6
    assert align.prefix_distance(a, b, limit=5) == 6


def test_prefix_distance_is_anchored():
    rng = np.random.default_rng(0)
    t = rng.integers(0, 4, 800).astype(np.uint8)
    embedded = t[400:440].copy()
    # unanchored scan finds it exactly; anchored scan must not
    assert align.semiglobal_distance(embedded, t) == 0
    assert align.prefix_distance(embedded, t, limit=10) == 11


def test_end_distances_locate_exact_hit():
    rng = np.random.default_rng(1)
    t = rng.integers(0, 4, 200).astype(np.uint8)
    p = t[60:80].copy()
    ends = align.semiglobal_end_distances(p, t)
    assert ends[79] == 0


@given(nonempty, nonempty)
@settings(max_examples=100, deadline=None)
def test_global_ops_reconstruct_and_cost(a, b):
    ops = align.global_align_ops(a, b)
    i = j = cost = 0
    for op in ops:
        if op == align.OP_MATCH:
            cost += int(a[i] != b[j])
            i += 1
            j += 1
        elif op == align.OP_DELETE:
            cost += 1
            i += 1
        else:
            cost += 1
            j += 1
    assert (i, j) == (a.size, b.size)
    assert cost == align.levenshtein(a, b)


def test_backend_flag_selects_numpy():
    code = "import dnapix.align as m; print(m.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        env=dict(os.environ, DNAPIX_NUMBA="0"),
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_backends_agree():
    """Both backends produce identical distances on random inputs."""
    code = """
import json
import numpy as np
from dnapix import align
rng = np.random.default_rng(7)
out = []
for _ in range(60):
    p = rng.integers(0, 4, int(rng.integers(1, 50))).astype(np.uint8)
    t = rng.integers(0, 4, int(rng.integers(0, 120))).astype(np.uint8)
    out.append([
        align.levenshtein(p, t),
        align.semiglobal_distance(p, t),
        align.prefix_distance(p, t),
        align.global_align_ops(p, t).tolist(),
        align.semiglobal_end_distances(p, t).tolist(),
    ])
print(json.dumps({"backend": align.BACKEND, "results": out}))
"""
    runs = {}
    for flag in ("0", "1"):
        out = subprocess.run(
            [sys.executable, "-c", code],
            env=dict(os.environ, DNAPIX_NUMBA=flag),
            capture_output=True,
            text=True,
            check=True,
        )
        data = json.loads(out.stdout.strip().splitlines()[-1])
        runs[data["backend"]] = data["results"]
    if set(runs) != {"numpy", "numba"}:
        pytest.skip("numba backend unavailable")
    assert runs["numpy"] == runs["numba"]
