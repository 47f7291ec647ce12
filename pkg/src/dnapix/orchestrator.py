"""Human-steerable progressive retrieval over a simulated sequencer.

A RetrievalSession walks an image's resolution layers: each step sequences
the layer's molecules (adaptive sampling against that layer's reference),
decodes the layer, and emits an event carrying a losslessly compressed
preview raster plus accumulated cost counters.  Between layers the session
waits for an advance or stop command, mirroring the operator's
"good enough?" decision.

Pools carry no block-level bookkeeping, so builds write a layer manifest
sidecar (JSON) recording each layer's data-block count and parity layout;
retrieval needs it to place parity groups before any block decodes.
"""

import io
import json
import math
import uuid
from dataclasses import dataclass

from . import cost, decoder, pool as pool_mod, pyramid, sequencer, transcode
from .exceptions import (
    DnapixError,
    IrrecoverableLayer,
    NotFound,
    SessionComplete,
    SessionStopped,
)

READ_BUDGET_FACTOR = 50  # give up on a layer past this multiple of target coverage

STATE_RUNNING = "running"
STATE_AWAITING = "awaiting_decision"
STATE_STOPPED = "stopped"
STATE_COMPLETE = "complete"


# ---------------------------------------------------------------------------
# layer manifest sidecar


def write_manifest(path, manifest):
    """manifest: {"img/layer": {"n_data", "parity_group", "n_parity",
    "blocks_per_molecule"}}"""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def manifest_entry(manifest, image_id, layer_index):
    key = pool_mod.ref_key(image_id, layer_index)
    try:
        return manifest[key]
    except KeyError:
        raise NotFound(f"{key} not in layer manifest") from None


# ---------------------------------------------------------------------------
# build helpers


def build_pool_from_bitstreams(
    bitstreams,
    dictionary,
    the_pool,
    seed=0,
    blocks_per_molecule=pool_mod.DEFAULT_BLOCKS_PER_MOLECULE,
):
    """Design references and assemble molecules for encoded layer bitstreams.

    Mutates ``dictionary`` and ``the_pool`` in place; returns the manifest
    fragment covering the given layers.
    """
    ordered = sorted(bitstreams, key=lambda b: (b.image_id, b.layer_index))
    refs = pool_mod.design_references(
        len(ordered), existing=dictionary, seed=seed
    )
    manifest = {}
    for ref, bs in zip(refs, ordered):
        image_id, k = bs.image_id, bs.layer_index
        dictionary.register(image_id, k, ref)
        codes, meta = transcode.encode_layer_blocks(bs.payload, layer_tag=k)
        for mol in pool_mod.assemble(
            codes, ref, image_id, k, blocks_per_molecule=blocks_per_molecule
        ):
            the_pool.add(mol)
        manifest[pool_mod.ref_key(image_id, k)] = {
            "n_data": meta["n_data"],
            "parity_group": meta["parity_group"],
            "n_parity": meta["n_parity"],
            "blocks_per_molecule": blocks_per_molecule,
        }
    return manifest


def build_image_pool(
    image,
    image_id,
    n_levels,
    dictionary,
    the_pool,
    seed=0,
    blocks_per_molecule=pool_mod.DEFAULT_BLOCKS_PER_MOLECULE,
):
    """Encode an image into layers, design references, assemble molecules.

    Mutates ``dictionary`` and ``the_pool`` in place; returns the manifest
    fragment for this image.
    """
    layers = pyramid.build_pyramid(image, n_levels)
    bitstreams = pyramid.encode_layers(layers, image_id)
    return build_pool_from_bitstreams(
        bitstreams,
        dictionary,
        the_pool,
        seed=seed,
        blocks_per_molecule=blocks_per_molecule,
    )


def pool_cost_inputs(the_pool, dictionary, image_id, params, pixels=None):
    """Theoretical CostInputs for one image from pool geometry.

    coverage = coverage_target reads/molecule x molecule length; gains are
    ratios, so the pixel denominator cancels and may be left defaulted.
    """
    layers = dictionary.layers_of(image_id)
    if not layers:
        raise NotFound(f"no layers registered for {image_id!r}")
    oligos = []
    coverage = []
    for k in layers:
        mols = [
            m
            for m in the_pool.molecules
            if m.image_id == image_id and m.layer_index == k
        ]
        if not mols:
            raise NotFound(f"pool holds no molecules for {image_id}/{k}")
        oligos.append(len(mols))
        mean_len = sum(len(m) for m in mols) / len(mols)
        coverage.append(params.coverage_target * mean_len)
    return cost.CostInputs.single_image(
        image_id, pixels or 1, oligos, coverage
    )


# ---------------------------------------------------------------------------
# retrieval session


@dataclass(frozen=True)
class SessionEvent:
    layer: int
    preview_png: bytes
    width: int
    height: int
    psnr_db: float  # None when no original is supplied or PSNR is infinite
    cost_nt: int
    gain_estimate: float
    state: str


def _encode_png(image):
    from PIL import Image as PILImage

    arr = image.plane()
    mode = "L" if image.channels == 1 else "RGB"
    buf = io.BytesIO()
    PILImage.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


class RetrievalSession:
    """Progressive retrieval of one image; layer index only moves forward."""

    def __init__(
        self,
        the_pool,
        dictionary,
        manifest,
        image_id,
        params=None,
        model=None,
        seed=0,
        original=None,
        budget_factor=READ_BUDGET_FACTOR,
    ):
        if image_id not in dictionary.image_ids():
            raise NotFound(f"image {image_id!r} not registered")
        self.session_id = str(uuid.uuid4())
        self.pool = the_pool
        self.dictionary = dictionary
        self.manifest = manifest
        self.image_id = image_id
        self.params = params or sequencer.SamplingParams()
        self.model = model or sequencer.ErrorModel(0.0, 0.0, 0.0)
        self.seed = seed
        self.original = original
        self.budget_factor = budget_factor
        self.layers = dictionary.layers_of(image_id)
        self.current_layer = -1  # last completed layer
        self.state = STATE_RUNNING
        self.cost_nt = 0
        self.events = []
        self.telemetries = []
        self.layer_payloads = []
        pixels = original.width * original.height if original is not None else None
        self._inputs = pool_cost_inputs(
            the_pool, dictionary, image_id, self.params, pixels=pixels
        )

    # -- sequencing one layer -------------------------------------------

    def _sequence_layer(self, k):
        """Sequence and decode layer k, retrying at doubled coverage within
        the read budget; all sequencing cost (including failed attempts)
        accrues."""
        ref_id = pool_mod.ref_key(self.image_id, k)
        entry = manifest_entry(self.manifest, self.image_id, k)
        reference = self.dictionary.lookup(self.image_id, k)
        factor = 1.0
        attempt = 0
        last_missing = None
        while factor <= self.budget_factor:
            params = sequencer.SamplingParams(
                buffer_nt=self.params.buffer_nt,
                decision_nt=self.params.decision_nt,
                match_threshold=self.params.match_threshold,
                coverage_target=self.params.coverage_target * factor,
            )
            session = sequencer.Session(
                self.pool,
                [ref_id],
                params,
                self.model,
                self.dictionary,
                seed=self.seed * 1009 + k * 101 + attempt,
            )
            session.run()
            self.telemetries.append(session.telemetry)
            self.cost_nt += session.telemetry.total_sequenced_nt
            reads = [
                (f"e{ev.event_idx:06d}", ev.noisy_codes)
                for ev in session.telemetry.events
                if ev.decision == "accepted"
            ]
            try:
                result = decoder.decode_layer(
                    reads,
                    reference,
                    entry["n_data"],
                    parity_group=entry["parity_group"],
                    blocks_per_molecule=entry["blocks_per_molecule"],
                )
                return result
            except IrrecoverableLayer as exc:
                last_missing = exc.missing
                factor *= 1.5
                attempt += 1
        raise IrrecoverableLayer(last_missing or [])

    def _emit(self):
        img, quality = decoder.progressive_reconstruct(
            self.layer_payloads, self.image_id, self.original
        )
        K = self.current_layer
        if quality is None and self.original is not None:
            scaled = pyramid.upsample_nearest(
                img, self.original.width, self.original.height
            )
            quality = pyramid.psnr(self.original, scaled)
        psnr_db = None
        if quality is not None and math.isfinite(quality):
            psnr_db = quality
        event = SessionEvent(
            layer=K,
            preview_png=_encode_png(img),
            width=img.width,
            height=img.height,
            psnr_db=psnr_db,
            cost_nt=self.cost_nt,
            gain_estimate=cost.image_gain(self._inputs, self.image_id, K),
            state=self.state,
        )
        self.events.append(event)
        return event

    def _run_next_layer(self):
        k = self.current_layer + 1
        self.state = STATE_RUNNING
        result = self._sequence_layer(k)
        self.layer_payloads.append(result.payload)
        self.current_layer = k
        self.state = (
            STATE_COMPLETE if k == self.layers[-1] else STATE_AWAITING
        )
        return self._emit()

    # -- public control surface -----------------------------------------

    def start(self):
        """Sequence layer 0 and pause for a decision."""
        if self.current_layer >= 0:
            raise DnapixError("session already started")
        return self._run_next_layer()

    def advance(self):
        if self.state in (STATE_STOPPED,):
            raise SessionStopped("session is stopped")
        if self.state == STATE_COMPLETE:
            raise SessionComplete("all layers retrieved")
        if self.state != STATE_AWAITING:
            raise DnapixError(f"cannot advance while {self.state}")
        return self._run_next_layer()

    def stop(self):
        """Freeze the session; the pool is untouched and counters final."""
        if self.state in (STATE_STOPPED, STATE_COMPLETE):
            raise SessionStopped("session is not running")
        self.state = STATE_STOPPED
        return self._emit()

    def cost_report(self):
        """Simulated-cost view over everything sequenced so far."""
        inputs = cost.CostInputs.single_image(
            self.image_id,
            self._inputs.pixels[self.image_id],
            [
                self._inputs.number_oligos[(self.image_id, k)]
                for k in range(self.current_layer + 1)
            ],
            [
                self._inputs.coverage[(self.image_id, k)]
                for k in range(self.current_layer + 1)
            ],
        )
        return cost.simulated_cost(self.telemetries, inputs)


def retrieve(
    the_pool,
    dictionary,
    manifest,
    image_id,
    max_layer=None,
    params=None,
    model=None,
    seed=0,
    original=None,
):
    """Non-interactive retrieval through ``max_layer`` (default: all layers).

    Returns the finished RetrievalSession.
    """
    session = RetrievalSession(
        the_pool,
        dictionary,
        manifest,
        image_id,
        params=params,
        model=model,
        seed=seed,
        original=original,
    )
    session.start()
    last = session.layers[-1] if max_layer is None else max_layer
    while session.state == STATE_AWAITING and session.current_layer < last:
        session.advance()
    if session.state == STATE_AWAITING:
        session.stop()
    return session
