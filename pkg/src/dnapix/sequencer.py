"""Adaptive-sampling sequencer simulator.

Molecules are drawn with replacement proportional to abundance; after a fixed
decision latency the noisy read prefix is matched against the currently
targeted reference by semi-global alignment and the strand is either kept
(full read, full cost) or ejected back into the pool at exactly the
decision-latency cost.  Targets can switch mid-run and the whole session is
deterministic given (pool, schedule, params, seed, command timeline).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import seq
from .align import prefix_distance
from .exceptions import DnapixError, NotFound, SessionStopped

DECISION_NT = 800


@dataclass(frozen=True)
class ErrorModel:
    p_sub: float = 0.005
    p_ins: float = 0.005
    p_del: float = 0.005
    seed: int = 0
    strict: bool = True  # strict models keep rates in the calibrated [0, 0.2] band

    def __post_init__(self):
        hi = 0.2 if self.strict else 1.0
        for name in ("p_sub", "p_ins", "p_del"):
            p = getattr(self, name)
            if not 0.0 <= p <= hi:
                raise DnapixError(f"{name}={p} outside [0, {hi}]")

    @property
    def noiseless(self):
        return self.p_sub == 0.0 and self.p_ins == 0.0 and self.p_del == 0.0


@dataclass(frozen=True)
class SamplingParams:
    buffer_nt: int = 400
    decision_nt: int = DECISION_NT
    match_threshold: float = 0.25
    coverage_target: float = 10.0

    def __post_init__(self):
        if not self.buffer_nt <= self.decision_nt <= 1000:
            raise DnapixError("need buffer_nt <= decision_nt <= 1000")


@dataclass(frozen=True)
class ReadEvent:
    event_idx: int
    molecule_id: str
    decision: str  # "accepted" | "ejected"
    sequenced_nt: int
    target_ref_id: str
    noisy_codes: np.ndarray = None  # present iff accepted


@dataclass
class SessionTelemetry:
    events: list = field(default_factory=list)
    accepted_counts: dict = field(default_factory=dict)  # ref_id -> count
    total_sequenced_nt: int = 0

    def record(self, event):
        self.events.append(event)
        self.total_sequenced_nt += event.sequenced_nt
        if event.decision == "accepted":
            self.accepted_counts[event.target_ref_id] = (
                self.accepted_counts.get(event.target_ref_id, 0) + 1
            )


def apply_errors(codes, model, rng=None):
    """Independent per-position substitution / insertion / deletion channel."""
    codes = seq.as_codes(codes)
    if rng is None:
        rng = np.random.default_rng(model.seed)
    if model.noiseless:
        return codes.copy()
    n = codes.size
    out = codes.copy()
    sub_mask = rng.random(n) < model.p_sub
    n_sub = int(sub_mask.sum())
    if n_sub:
        out[sub_mask] = (out[sub_mask] + 1 + rng.integers(0, 3, n_sub)) % 4
    del_mask = rng.random(n) < model.p_del
    ins_mask = rng.random(n + 1) < model.p_ins  # one slot before each base + tail
    n_ins = int(ins_mask.sum())
    if not n_ins and not del_mask.any():
        return out
    ins_pos = np.flatnonzero(ins_mask)
    ins_bases = rng.integers(0, 4, n_ins).astype(np.uint8)
    keep_pos = np.flatnonzero(~del_mask)
    # stable interleave: insertions sort before the base at the same slot
    keys = np.concatenate([keep_pos * 2 + 1, ins_pos * 2])
    vals = np.concatenate([out[keep_pos], ins_bases])
    order = np.argsort(keys, kind="stable")
    return vals[order]


def decide(prefix_codes, targets, params):
    """keep iff some target matches the head of the prefix at the threshold.

    The reference sits at the molecule start, so the alignment is anchored
    there (free end gap only) — an unanchored scan would false-match inside
    long payload regions.
    """
    if not targets:
        return False, None
    best = None
    for t in targets:
        t = seq.as_codes(t)
        limit = math.floor(params.match_threshold * t.size)
        if prefix_codes.size >= t.size and np.array_equal(prefix_codes[: t.size], t):
            return True, 0
        d = prefix_distance(t, prefix_codes, limit)
        if best is None or d < best:
            best = d
        if d <= limit:
            return True, d
    return False, best


class Session:
    """One deterministic adaptive-sampling run over an immutable pool.

    Commands (switch_target / early_stop) take effect at draw boundaries; a
    read already past its decision completes under the old target.
    """

    def __init__(self, pool, schedule, params, model, dictionary, seed=0):
        for ref_id in schedule:
            img, _, layer = ref_id.rpartition("/")
            if (img, int(layer)) not in dictionary:
                raise NotFound(f"schedule entry {ref_id} not in dictionary")
        self.pool = pool
        self.schedule = list(schedule)
        self.params = params
        self.model = model
        self.dictionary = dictionary
        self.rng = np.random.default_rng(seed)
        self.telemetry = SessionTelemetry()
        self.accepted_reads = []  # (ref_id, molecule_id, noisy codes)
        self._sched_pos = 0
        self.stopped = False
        self._mols = list(pool.molecules)
        weights = np.array(
            [pool.abundances[m.molecule_id] for m in self._mols], dtype=np.float64
        )
        if weights.size == 0 or weights.sum() <= 0:
            raise DnapixError("cannot sequence an empty pool")
        self._cum = np.cumsum(weights) / weights.sum()
        self._target_codes = {}
        self._target_count = {}
        for ref_id in self.schedule:
            img, _, layer = ref_id.rpartition("/")
            self._target_codes[ref_id] = seq.encode_seq(dictionary.lookup(img, layer))
            self._target_count[ref_id] = pool.count_for(img, int(layer))

    # -- state ----------------------------------------------------------

    @property
    def current_target(self):
        if self._sched_pos >= len(self.schedule):
            return None
        return self.schedule[self._sched_pos]

    @property
    def done(self):
        return self.stopped or self.current_target is None

    def accepted_for(self, ref_id):
        return self.telemetry.accepted_counts.get(ref_id, 0)

    def _coverage_met(self):
        ref_id = self.current_target
        need = math.ceil(self.params.coverage_target * self._target_count[ref_id])
        return self.accepted_for(ref_id) >= need

    # -- commands -------------------------------------------------------

    def switch_target(self, ref_id=None):
        """Advance to the next schedule entry (or jump to ``ref_id``)."""
        if self.done:
            raise SessionStopped("session is not running")
        if ref_id is None:
            self._sched_pos += 1
        else:
            if ref_id not in self._target_codes:
                img, _, layer = ref_id.rpartition("/")
                self._target_codes[ref_id] = seq.encode_seq(
                    self.dictionary.lookup(img, layer)
                )
                self._target_count[ref_id] = self.pool.count_for(img, int(layer))
                self.schedule.append(ref_id)
            self._sched_pos = self.schedule.index(ref_id)

    def early_stop(self):
        if self.done:
            raise SessionStopped("session is not running")
        self.stopped = True

    # -- sequencing -----------------------------------------------------

    def step(self):
        """Draw one molecule, decide, record the event. No-op when done."""
        if self.done:
            return None
        ref_id = self.current_target
        target = self._target_codes[ref_id]
        idx = int(np.searchsorted(self._cum, self.rng.random(), side="right"))
        mol = self._mols[min(idx, len(self._mols) - 1)]
        noisy = apply_errors(mol.codes, self.model, self.rng)
        prefix = noisy[: self.params.decision_nt]
        keep, _ = decide(prefix, [target], self.params)
        if keep:
            event = ReadEvent(
                event_idx=len(self.telemetry.events),
                molecule_id=mol.molecule_id,
                decision="accepted",
                sequenced_nt=int(noisy.size),
                target_ref_id=ref_id,
                noisy_codes=noisy,
            )
            self.accepted_reads.append((ref_id, mol.molecule_id, noisy))
        else:
            event = ReadEvent(
                event_idx=len(self.telemetry.events),
                molecule_id=mol.molecule_id,
                decision="ejected",
                sequenced_nt=min(self.params.decision_nt, int(noisy.size)),
                target_ref_id=ref_id,
            )
        self.telemetry.record(event)
        if keep and self._coverage_met():
            self._sched_pos += 1
        return event

    def run(self, commands=(), max_events=None):
        """Run to completion, applying (event_idx, command, arg) at boundaries."""
        timeline = sorted(commands, key=lambda c: c[0])
        ci = 0
        while not self.done:
            while ci < len(timeline) and timeline[ci][0] <= len(self.telemetry.events):
                _, cmd, arg = timeline[ci]
                ci += 1
                if cmd == "switch_target":
                    self.switch_target(arg)
                elif cmd == "early_stop":
                    self.early_stop()
                else:
                    raise DnapixError(f"unknown command {cmd!r}")
                if self.done:
                    return self.telemetry
            if max_events is not None and len(self.telemetry.events) >= max_events:
                break
            self.step()
        return self.telemetry


def run_session(pool, schedule, params, model, dictionary, seed=0, commands=()):
    """Convenience wrapper: build a Session, run it, return (telemetry, reads)."""
    session = Session(pool, schedule, params, model, dictionary, seed=seed)
    session.run(commands)
    return session.telemetry, session.accepted_reads


# ---------------------------------------------------------------------------
# telemetry export


def write_telemetry(telemetry, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ev in telemetry.events:
            fh.write(
                f"{ev.event_idx}\t{ev.molecule_id}\t{ev.decision}\t"
                f"{ev.sequenced_nt}\t{ev.target_ref_id}\n"
            )


def read_telemetry(path):
    t = SessionTelemetry()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            idx, mol_id, decision, nt, ref_id = line.split("\t")
            t.record(
                ReadEvent(
                    event_idx=int(idx),
                    molecule_id=mol_id,
                    decision=decision,
                    sequenced_nt=int(nt),
                    target_ref_id=ref_id,
                )
            )
    return t
