"""Reference design, molecule assembly, the reference dictionary, and pool files.

A molecule is a reference sequence followed by adapter-delimited data blocks;
molecules must clear 1000 nt so the simulated sequencer can align the
reference before its keep-or-eject decision.  Pools are abundance-weighted
multisets of molecules persisted FASTA-style; the dictionary mapping
(image_id, layer) -> reference rides in a JSON sidecar.
"""

import json
import uuid
from dataclasses import dataclass

import numpy as np

from . import seq, transcode
from .align import levenshtein
from .exceptions import DesignExhausted, DnapixError, DuplicateEntry, NotFound

REFERENCE_LENGTH = 40
MIN_EDIT_DISTANCE = 15
MIN_MOLECULE_NT = 1000
DEFAULT_BLOCKS_PER_MOLECULE = 7

# fixed linker between ligated blocks: GC 50%, max homopolymer 1
DEFAULT_ADAPTER = "ACGTAGCTGATCGTACGATG"

_NAMESPACE = uuid.UUID("8e0c2f1a-5f43-4c8e-9d3b-7a2b1c6d4e5f")


def ref_key(image_id, layer_index):
    return f"{image_id}/{layer_index}"


# ---------------------------------------------------------------------------
# reference design


def _reference_ok(codes):
    gc = seq.gc_fraction(codes)
    if gc < 0.40 or gc > 0.60:
        return False
    return seq.max_homopolymer(codes) <= 3


def design_references(
    n,
    existing=None,
    seed=0,
    length=REFERENCE_LENGTH,
    d_min=MIN_EDIT_DISTANCE,
    max_attempts=20000,
):
    """Rejection-sample `n` mutually orthogonal reference sequences.

    Orthogonality proxy: pairwise edit distance >= d_min against both the
    already-registered references and each other.  Deterministic given seed.
    """
    if n < 1:
        raise DnapixError("n must be >= 1")
    rng = np.random.default_rng(seed)
    taken = [seq.encode_seq(s) for s in (existing.sequences() if existing else [])]
    out = []
    attempts = 0
    while len(out) < n:
        if attempts >= max_attempts:
            raise DesignExhausted(
                f"found {len(out)}/{n} references in {max_attempts} attempts; "
                "d_min may be too aggressive"
            )
        attempts += 1
        cand = rng.integers(0, 4, length).astype(np.uint8)
        if not _reference_ok(cand):
            continue
        if any(levenshtein(cand, t, d_min - 1) < d_min for t in taken):
            continue
        taken.append(cand)
        out.append(seq.decode_seq(cand))
    return out


# ---------------------------------------------------------------------------
# reference dictionary


class ReferenceDictionary:
    """Injective map (image_id, layer_index) -> reference sequence."""

    def __init__(self):
        self._entries = {}

    def register(self, image_id, layer_index, reference):
        key = (image_id, int(layer_index))
        if key in self._entries:
            raise DuplicateEntry(f"{ref_key(*key)} already registered")
        if reference in self._entries.values():
            raise DuplicateEntry("reference sequence already in use")
        self._entries[key] = reference

    def lookup(self, image_id, layer_index):
        try:
            return self._entries[(image_id, int(layer_index))]
        except KeyError:
            raise NotFound(f"{ref_key(image_id, layer_index)} not registered") from None

    def __contains__(self, key):
        return (key[0], int(key[1])) in self._entries

    def __len__(self):
        return len(self._entries)

    def items(self):
        return sorted(self._entries.items())

    def sequences(self):
        return [self._entries[k] for k in sorted(self._entries)]

    def image_ids(self):
        return sorted({img for img, _ in self._entries})

    def layers_of(self, image_id):
        return sorted(k for img, k in self._entries if img == image_id)

    def save(self, path):
        obj = {ref_key(img, k): ref for (img, k), ref in self.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        d = cls()
        for key, ref in sorted(obj.items()):
            img, _, layer = key.rpartition("/")
            d.register(img, int(layer), ref)
        return d


# ---------------------------------------------------------------------------
# molecules and pools


@dataclass(frozen=True)
class Molecule:
    molecule_id: str
    image_id: str
    layer_index: int
    codes: np.ndarray  # full sequence, uint8 base codes

    @property
    def sequence(self):
        return seq.decode_seq(self.codes)

    def __len__(self):
        return self.codes.size


def min_blocks_per_molecule(ref_len=REFERENCE_LENGTH, adapter_len=None):
    if adapter_len is None:
        adapter_len = len(DEFAULT_ADAPTER)
    unit = transcode.BLOCK_NT + adapter_len
    return -(-(MIN_MOLECULE_NT - ref_len) // unit)


def assemble(
    block_codes,
    reference,
    image_id,
    layer_index,
    blocks_per_molecule=DEFAULT_BLOCKS_PER_MOLECULE,
    adapter=DEFAULT_ADAPTER,
    cfg=None,
):
    """Chunk block code rows into adapter-ligated molecules.

    The last molecule is topped up with pad blocks (layer_tag 255) so every
    molecule has identical geometry and clears the 1000-nt floor.
    """
    block_codes = np.asarray(block_codes, dtype=np.uint8)
    ref_codes = seq.encode_seq(reference)
    ada_codes = seq.encode_seq(adapter)
    b_min = min_blocks_per_molecule(ref_codes.size, ada_codes.size)
    if blocks_per_molecule < b_min:
        raise DnapixError(
            f"blocks_per_molecule={blocks_per_molecule} too small; need >= {b_min} "
            f"for the {MIN_MOLECULE_NT}-nt molecule floor"
        )
    n = block_codes.shape[0]
    b = blocks_per_molecule
    n_pad = (-n) % b
    if n_pad:
        pad_payloads = np.zeros((n_pad, transcode.BLOCK_PAYLOAD_BITS), dtype=np.uint8)
        pad_codes, _ = transcode.encode_blocks(
            pad_payloads,
            transcode.PAD_LAYER_TAG,
            np.arange(n, n + n_pad),
            0,
            cfg,
        )
        block_codes = np.concatenate([block_codes, pad_codes], axis=0)
    molecules = []
    for m in range(block_codes.shape[0] // b):
        chunk = block_codes[m * b : (m + 1) * b]
        parts = [ref_codes]
        for row in chunk:
            parts.append(ada_codes)
            parts.append(row)
        full = np.concatenate(parts)
        mol_id = str(uuid.uuid5(_NAMESPACE, f"{image_id}/{layer_index}/{m}"))
        molecules.append(
            Molecule(
                molecule_id=mol_id,
                image_id=image_id,
                layer_index=int(layer_index),
                codes=full,
            )
        )
    return molecules


class Pool:
    """Abundance-weighted multiset of molecules."""

    def __init__(self):
        self.molecules = []
        self.abundances = {}  # molecule_id -> count
        self._by_id = {}

    def add(self, molecule, abundance=1):
        if abundance < 1:
            raise DnapixError("abundance must be >= 1")
        if molecule.molecule_id not in self._by_id:
            self.molecules.append(molecule)
            self._by_id[molecule.molecule_id] = molecule
            self.abundances[molecule.molecule_id] = int(abundance)
        else:
            self.abundances[molecule.molecule_id] += int(abundance)

    def merge(self, other):
        out = Pool()
        for m in self.molecules:
            out.add(m, self.abundances[m.molecule_id])
        for m in other.molecules:
            out.add(m, other.abundances[m.molecule_id])
        return out

    def total_molecules(self):
        return sum(self.abundances.values())

    def count_for(self, image_id, layer_index):
        """Distinct molecules carrying this (image, layer)."""
        return sum(
            1
            for m in self.molecules
            if m.image_id == image_id and m.layer_index == int(layer_index)
        )

    def abundance_snapshot(self):
        return dict(sorted(self.abundances.items()))


def write_pool(pool, path):
    with open(path, "w", encoding="utf-8") as fh:
        for mol in sorted(pool.molecules, key=lambda m: m.molecule_id):
            ab = pool.abundances[mol.molecule_id]
            fh.write(
                f">mol:{mol.molecule_id} img:{mol.image_id} "
                f"layer:{mol.layer_index} abundance:{ab}\n"
            )
            s = mol.sequence
            for i in range(0, len(s), 80):
                fh.write(s[i : i + 80] + "\n")


def read_pool(path):
    pool = Pool()
    header = None
    chunks = []

    def flush():
        if header is None:
            return
        fields = dict(part.split(":", 1) for part in header.split())
        body = "".join(chunks)
        if not body:
            raise DnapixError(f"empty record for molecule {fields.get('mol')}")
        mol = Molecule(
            molecule_id=fields["mol"],
            image_id=fields["img"],
            layer_index=int(fields["layer"]),
            codes=seq.encode_seq(body),
        )
        pool.add(mol, int(fields["abundance"]))

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith(">"):
                flush()
                header = line[1:]
                chunks = []
            else:
                if header is None:
                    raise DnapixError("sequence data before any record header")
                chunks.append(line)
        flush()
    return pool
