"""Retrieval session state machine, manifests, cost wiring, CLI."""

import json
import sys

import numpy as np
import pytest

from dnapix import cli, cost, orchestrator, pool, pyramid, sequencer
from dnapix.exceptions import (
    DnapixError,
    NotFound,
    SessionComplete,
    SessionStopped,
)
from dnapix.sequencer import ErrorModel, SamplingParams

from conftest import tiny_image


@pytest.fixture(scope="module")
def build():
    img = tiny_image()
    d = pool.ReferenceDictionary()
    p = pool.Pool()
    manifest = orchestrator.build_image_pool(img, "tiny", 3, d, p, seed=0)
    return img, d, p, manifest


def make_session(build, **kw):
    img, d, p, manifest = build
    kw.setdefault("params", SamplingParams(coverage_target=6.0))
    kw.setdefault("model", ErrorModel(0, 0, 0))
    return orchestrator.RetrievalSession(p, d, manifest, "tiny", original=img, **kw)


# ---------------------------------------------------------------------------
# manifest


def test_manifest_roundtrip(tmp_path, build):
    _, _, _, manifest = build
    path = tmp_path / "m.json"
    orchestrator.write_manifest(path, manifest)
    assert orchestrator.read_manifest(path) == manifest
    entry = orchestrator.manifest_entry(manifest, "tiny", 0)
    assert set(entry) == {"n_data", "parity_group", "n_parity", "blocks_per_molecule"}
    with pytest.raises(NotFound):
        orchestrator.manifest_entry(manifest, "tiny", 9)


def test_build_registers_all_layers(build):
    img, d, p, manifest = build
    assert d.layers_of("tiny") == [0, 1, 2]
    assert len(manifest) == 3
    for k in range(3):
        assert p.count_for("tiny", k) >= 1


# ---------------------------------------------------------------------------
# session lifecycle


def test_session_walks_all_layers(build):
    img, *_ = build
    s = make_session(build, seed=1)
    ev = s.start()
    assert ev.layer == 0
    assert s.state == orchestrator.STATE_AWAITING
    assert (ev.width, ev.height) == (24, 16)
    assert ev.preview_png.startswith(b"\x89PNG")
    assert ev.psnr_db is not None and ev.psnr_db > 10
    costs = [ev.cost_nt]
    psnrs = [ev.psnr_db]
    while s.state == orchestrator.STATE_AWAITING:
        ev = s.advance()
        costs.append(ev.cost_nt)
        psnrs.append(ev.psnr_db if ev.psnr_db is not None else float("inf"))
    assert s.state == orchestrator.STATE_COMPLETE
    assert ev.layer == 2
    assert ev.psnr_db is None  # lossless final layer -> infinite PSNR
    assert psnrs == sorted(psnrs)  # quality improves with each layer
    assert costs == sorted(costs) and costs[0] > 0  # cost only accumulates
    # final image is bit-exact
    full, q = __import__("dnapix.decoder", fromlist=["d"]).progressive_reconstruct(
        s.layer_payloads, "tiny", img
    )
    assert full == img and q == float("inf")


def test_gain_estimate_decreases(build):
    s = make_session(build, seed=2)
    s.start()
    gains = [e.gain_estimate for e in s.events]
    while s.state == orchestrator.STATE_AWAITING:
        gains.append(s.advance().gain_estimate)
    assert gains == sorted(gains, reverse=True)
    assert gains[-1] == pytest.approx(1.0)
    assert gains[0] > 1.0


def test_stop_freezes_session(build):
    s = make_session(build, seed=3)
    s.start()
    before = s.cost_nt
    ev = s.stop()
    assert s.state == orchestrator.STATE_STOPPED
    assert ev.state == orchestrator.STATE_STOPPED
    assert ev.cost_nt == before
    with pytest.raises(SessionStopped):
        s.advance()
    with pytest.raises(SessionStopped):
        s.stop()


def test_advance_past_complete_rejected(build):
    s = make_session(build, seed=4)
    s.start()
    while s.state == orchestrator.STATE_AWAITING:
        s.advance()
    with pytest.raises(SessionComplete):
        s.advance()
    with pytest.raises(SessionStopped):
        s.stop()


def test_double_start_rejected(build):
    s = make_session(build, seed=5)
    s.start()
    with pytest.raises(DnapixError):
        s.start()


def test_unknown_image_rejected(build):
    img, d, p, manifest = build
    with pytest.raises(NotFound):
        orchestrator.RetrievalSession(p, d, manifest, "nope")


def test_cost_report_matches_telemetry(build):
    s = make_session(build, seed=6)
    s.start()
    rep = s.cost_report()
    assert rep.variant == "simulated"
    assert sum(rep.nucs_per_layer) == s.cost_nt
    s.advance()
    rep = s.cost_report()
    assert sum(rep.nucs_per_layer) == s.cost_nt
    assert rep.n_levels == 2


def test_retrieve_helper_stops_at_max_layer(build):
    img, d, p, manifest = build
    s = orchestrator.retrieve(
        p,
        d,
        manifest,
        "tiny",
        max_layer=0,
        params=SamplingParams(coverage_target=6.0),
        model=ErrorModel(0, 0, 0),
        seed=7,
        original=img,
    )
    assert s.current_layer == 0
    assert s.state == orchestrator.STATE_STOPPED
    full = orchestrator.retrieve(
        p,
        d,
        manifest,
        "tiny",
        params=SamplingParams(coverage_target=6.0),
        model=ErrorModel(0, 0, 0),
        seed=7,
        original=img,
    )
    assert full.state == orchestrator.STATE_COMPLETE


def test_pool_cost_inputs_geometry(build):
    img, d, p, manifest = build
    inputs = orchestrator.pool_cost_inputs(
        p, d, "tiny", SamplingParams(coverage_target=10.0), pixels=img.width * img.height
    )
    for k in range(3):
        assert inputs.number_oligos[("tiny", k)] == p.count_for("tiny", k)
        assert inputs.coverage[("tiny", k)] == pytest.approx(10.0 * 1216)


# ---------------------------------------------------------------------------
# CLI end-to-end


def test_cli_pipeline(tmp_path):
    from PIL import Image as PILImage

    img = tiny_image()
    png = tmp_path / "in.png"
    PILImage.fromarray(img.plane(), mode="L").save(png)

    enc_dir = tmp_path / "encoded"
    assert cli.main(["encode", str(png), "--levels", "3", "--image-id", "tiny", "--out", str(enc_dir)]) == 0
    hpx = enc_dir / "tiny.hpx"
    assert hpx.exists()

    d_path, p_path, m_path = tmp_path / "d.json", tmp_path / "p.fa", tmp_path / "m.json"
    assert (
        cli.main(
            [
                "build-pool",
                str(hpx),
                "--dict",
                str(d_path),
                "--pool",
                str(p_path),
                "--manifest",
                str(m_path),
            ]
        )
        == 0
    )
    assert p_path.exists() and d_path.exists() and m_path.exists()

    out_dir = tmp_path / "out"
    assert (
        cli.main(
            [
                "retrieve",
                "--pool",
                str(p_path),
                "--dict",
                str(d_path),
                "--manifest",
                str(m_path),
                "--image",
                "tiny",
                "--auto",
                "--coverage",
                "6",
                "--out",
                str(out_dir),
                "--csv",
                str(tmp_path / "cost.csv"),
            ]
        )
        == 0
    )
    previews = sorted(out_dir.glob("*.png"))
    assert len(previews) == 3
    assert (out_dir / "tiny_telemetry.tsv").exists()
    header = (tmp_path / "cost.csv").read_text().splitlines()[0]
    assert header == "layer,K,oligos,nucs,Rc_pd,Gpd"
    # final preview decodes back to the input pixels
    got = np.asarray(PILImage.open(previews[-1]))
    assert np.array_equal(got, img.plane())


def test_cli_analyze_reference_fixture(capsys):
    assert cli.main(["analyze", "--reference-fixture"]) == 0
    out = capsys.readouterr().out
    for count in ("802", "2229", "6208"):
        assert count in out


def test_cli_errors_exit_nonzero(tmp_path):
    assert cli.main(["encode", str(tmp_path / "missing.png"), "--out", str(tmp_path / "x.hpx")]) == 1
