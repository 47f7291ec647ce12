"""Read-cost model against hand-evaluated oracles."""

import io

import pytest

from dnapix import cost, pool, sequencer, transcode
from dnapix.exceptions import DnapixError, NotFound
from dnapix.sequencer import ErrorModel, SamplingParams


def hand_inputs():
    """1000 pixels, layer nucs 100/300/600 at coverage 1 -> R_c = 1.0."""
    return cost.CostInputs.single_image("a", 1000, [100, 300, 600], [1.0, 1.0, 1.0])


# ---------------------------------------------------------------------------
# theoretical oracles


def test_hand_costs():
    inp = hand_inputs()
    # hand sums: cumulative nucs 100, 400, 1000 over 1000 px
    assert cost.read_cost_pd(inp, 0) == pytest.approx(0.1)
    assert cost.read_cost_pd(inp, 1) == pytest.approx(0.4)
    assert cost.read_cost_pd(inp, 2) == pytest.approx(1.0)
    assert cost.read_cost_full(inp) == pytest.approx(1.0)
    assert cost.gain(inp, 0) == pytest.approx(10.0)
    assert cost.gain(inp, 1) == pytest.approx(2.5)
    assert cost.gain(inp, 2) == pytest.approx(1.0)


def test_nucs_product():
    inp = cost.CostInputs.single_image("a", 10, [802], [1216.0])
    assert cost.nucs(inp, "a", 0) == pytest.approx(802 * 1216.0) == pytest.approx(975232)


def test_gain_scale_invariance():
    a = hand_inputs()
    b = cost.CostInputs.single_image("a", 1000, [100, 300, 600], [7.0, 7.0, 7.0])
    for K in range(3):
        assert cost.gain(b, K) == pytest.approx(cost.gain(a, K))


def test_multi_image_average_gain():
    inp = cost.CostInputs(
        n_levels=2,
        pixels={"a": 100, "b": 100},
        number_oligos={("a", 0): 10, ("a", 1): 90, ("b", 0): 20, ("b", 1): 20},
        coverage={k: 1.0 for k in [("a", 0), ("a", 1), ("b", 0), ("b", 1)]},
    )
    # image gains at K=0: a -> 100/10 = 10, b -> 40/20 = 2; mean = 6
    assert cost.image_gain(inp, "a", 0) == pytest.approx(10.0)
    assert cost.image_gain(inp, "b", 0) == pytest.approx(2.0)
    assert cost.average_gain(inp, 0) == pytest.approx(6.0)
    # pooled gain differs: 140 / 30
    assert cost.gain(inp, 0) == pytest.approx(140 / 30)


def test_theoretical_report_consistency():
    rep = cost.theoretical_report(hand_inputs())
    assert rep.variant == "theoretical"
    assert rep.r_c == pytest.approx(1.0)
    assert rep.r_c_pd == pytest.approx((0.1, 0.4, 1.0))
    assert rep.g_pd == pytest.approx((10.0, 2.5, 1.0))
    assert rep.oligos_per_layer == (100, 300, 600)
    assert rep.g_pd[-1] == pytest.approx(1.0)  # full prefix always gain 1


def test_input_validation():
    with pytest.raises(DnapixError):
        cost.CostInputs(n_levels=0)
    with pytest.raises(DnapixError):
        cost.CostInputs.single_image("a", 0, [1], [1.0])
    with pytest.raises(DnapixError):
        cost.CostInputs.single_image("a", 10, [0], [1.0])
    with pytest.raises(DnapixError):
        cost.CostInputs.single_image("a", 10, [1, 2], [1.0])
    inp = hand_inputs()
    with pytest.raises(DnapixError):
        cost.read_cost_pd(inp, 3)
    with pytest.raises(NotFound):
        cost.nucs(inp, "zzz", 0)


def test_coverage_reads_view():
    inp = cost.CostInputs.single_image("a", 10, [5], [12160.0])
    assert inp.coverage_reads("a", 0, 1216) == pytest.approx(10.0)


# ---------------------------------------------------------------------------
# simulated variant


def build_pool():
    d = pool.ReferenceDictionary()
    refs = pool.design_references(2, seed=0)
    d.register("im", 0, refs[0])
    d.register("im", 1, refs[1])
    p = pool.Pool()
    import numpy as np

    rng = np.random.default_rng(0)
    for layer in (0, 1):
        mat = rng.integers(0, 2, (7, transcode.BLOCK_PAYLOAD_BITS)).astype(np.uint8)
        codes, _ = transcode.encode_blocks(mat, layer, np.arange(7), 0)
        for m in pool.assemble(codes, refs[layer], "im", layer):
            p.add(m)
    return p, d


def test_simulated_matches_event_log_exactly():
    p, d = build_pool()
    params = SamplingParams(coverage_target=3.0)
    tel, _ = sequencer.run_session(
        p, ["im/0", "im/1"], params, ErrorModel(0, 0, 0), d, seed=1
    )
    inp = cost.CostInputs.single_image("im", 1000, [1, 1], [1216.0, 1216.0])
    rep = cost.simulated_cost([tel], inp)
    assert rep.variant == "simulated"
    # total simulated nucs must equal the telemetry sum exactly
    assert sum(rep.nucs_per_layer) == tel.total_sequenced_nt
    assert rep.r_c == pytest.approx(tel.total_sequenced_nt / 1000)
    # simulated minus theoretical = ejection overhead = n_ejected * 800 / pixels
    n_acc = {0: 0, 1: 0}
    n_ej = 0
    for ev in tel.events:
        if ev.decision == "accepted":
            n_acc[int(ev.target_ref_id[-1])] += 1
        else:
            n_ej += 1
    theo_nt = 1216 * (n_acc[0] + n_acc[1])
    assert rep.r_c - theo_nt / 1000 == pytest.approx(n_ej * 800 / 1000)


def test_simulated_missing_layer_rejected():
    p, d = build_pool()
    tel, _ = sequencer.run_session(
        p, ["im/0"], SamplingParams(coverage_target=2.0), ErrorModel(0, 0, 0), d, seed=2
    )
    inp = cost.CostInputs.single_image("im", 1000, [1, 1], [1.0, 1.0])
    with pytest.raises(DnapixError, match="missing"):
        cost.simulated_cost([tel], inp)


# ---------------------------------------------------------------------------
# rendering and fixture


def test_render_table_shape():
    out = cost.render_table(cost.theoretical_report(hand_inputs()))
    lines = out.splitlines()
    assert lines[0].startswith("read-cost report")
    body = [l for l in lines if l.startswith("L")]
    assert len(body) == 3
    widths = {len(l) for l in lines[1:]}
    assert len(widths) == 1  # fixed-width columns line up


def test_csv_roundtrip(tmp_path):
    rep = cost.theoretical_report(hand_inputs())
    path = tmp_path / "r.csv"
    cost.write_csv(rep, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "layer,K,oligos,nucs,Rc_pd,Gpd"
    assert rows[1].split(",")[:3] == ["L0", "0", "100"]
    assert float(rows[1].split(",")[5]) == pytest.approx(10.0)
    assert cost.render_csv(rep).strip().splitlines() == rows


def test_reference_fixture_reproduces_published_counts():
    rep = cost.theoretical_report(cost.reference_fixture())
    assert rep.oligos_per_layer == (802, 2229, 6208)
    # constant coverage means the gain reduces to oligo-count ratios
    total = sum(cost.REFERENCE_OLIGO_COUNTS.values())
    assert rep.g_pd[0] == pytest.approx(total / 802)
