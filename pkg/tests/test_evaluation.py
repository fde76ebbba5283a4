import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pareto_oracle
from svrec.bof import BofConfig, train_bof
from svrec.evaluation import (
    ALL,
    OperatingPoint,
    SweepGrid,
    accuracy,
    emit_report,
    pareto_front,
    pareto_indices,
    run_sweep,
    sweep_header,
)
from svrec.neural import NetworkConfig, TrainSpec, train
from svrec.scalability import ScalabilityCombo
from svrec.synth import generate_dataset

SVG = "{http://www.w3.org/2000/svg}"


def point(qp, scale, keep, rate, dl, bof=None, groups=("front", "back")):
    bof = dl if bof is None else bof
    acc = {"bof": {g: bof for g in groups}, "dl": {g: dl for g in groups}}
    acc["bof"][ALL], acc["dl"][ALL] = bof, dl
    return OperatingPoint(ScalabilityCombo(qp, scale, keep), rate, acc, 4, {ALL: dl}, {ALL: dl})


def test_accuracy_examples():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 2], [2, 1]) == 0.0
    assert accuracy([1, 2, 3, 4], [1, 2, 3, 0]) == 0.75
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_grid_defaults():
    combos = SweepGrid().combos()
    assert len(combos) == 60
    assert combos == sorted(combos)
    assert combos[0].as_dict() == {"qp": 0, "scale": 1, "keep": 1}
    with pytest.raises(ValueError):
        SweepGrid(qps=())


def test_pareto_examples():
    a, b = point(0, 1, 1, 10e3, 0.9), point(36, 1, 1, 20e3, 0.8)
    assert pareto_front([a, b]) == [a]
    same = [point(0, 1, 1, 5.0, 0.5), point(36, 1, 1, 5.0, 0.5), point(41, 1, 1, 5.0, 0.5)]
    assert pareto_front(same) == same
    with pytest.raises(ValueError):
        pareto_front([])


def test_pareto_selects_recognizer_and_group():
    p = point(0, 1, 1, 10.0, 0.5, bof=0.9)
    q = point(36, 1, 1, 5.0, 0.6, bof=0.1)
    assert pareto_front([p, q], "dl") == [q]
    assert pareto_front([p, q], "bof", "front") == [q, p]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pareto_matches_pairwise_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 201))
    # coarse values force plenty of equal bitrates and accuracies
    rates = rng.integers(1, 30, n).astype(float) * 1000
    accs = rng.integers(0, 11, n) / 10
    idx = pareto_indices(rates, accs)
    assert sorted(idx) == pareto_oracle(rates.tolist(), accs.tolist())
    assert [rates[i] for i in idx] == sorted(rates[i] for i in idx)
    for i in idx:  # no front member dominates another
        for j in idx:
            assert not (rates[j] <= rates[i] and accs[j] >= accs[i] and (rates[j] < rates[i] or accs[j] > accs[i]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adding_dominated_point_keeps_front(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 40))
    pts = [point(0, 1, 1, float(r), float(a)) for r, a in zip(rng.integers(1, 20, n), rng.integers(0, 6, n) / 5)]
    front = pareto_front(pts)
    anchor = front[int(rng.integers(len(front)))]
    extra = point(51, 8, 4, anchor.bitrate_bps + float(rng.integers(0, 3)), anchor.acc("dl") - 0.1)
    assert pareto_front(pts + [extra]) == front


def _grid_points():
    pts = []
    for qp in (0, 36, 51):
        for scale in (1, 8):
            for keep in (1, 4):
                rate = 1e6 / (1 + qp) / scale**2 / keep
                dl = 1.0 - qp / 100 - 0.05 * (scale > 1)
                pts.append(point(qp, scale, keep, rate, dl, bof=dl - qp / 200))
    return pts


def test_emit_report_files(tmp_path):
    pts = _grid_points()
    files = emit_report(pts[::-1], tmp_path)
    lines = files["sweep"].read_text().splitlines()
    assert len(lines) == len(pts) + 1
    assert lines[0].split(",") == sweep_header(["front", "back"])
    assert lines[1].startswith("0,1,1,")

    sweep_rows = set(lines[1:])
    pareto_lines = files["pareto"].read_text().splitlines()
    assert pareto_lines[0] == "front," + lines[0]
    assert all(row.split(",", 1)[1] in sweep_rows for row in pareto_lines[1:])

    for rec in ("bof", "dl"):
        root = ET.parse(files[f"scatter_{rec}"]).getroot()
        markers = root.findall(f"{SVG}circle")
        assert len(markers) == len(pts)
        marked = sorted((int(c.get("data-qp")), int(c.get("data-scale")), int(c.get("data-keep")))
                        for c in markers if "pareto" in c.get("class").split())
        expect = sorted((p.combo.qp, p.combo.scale_factor, p.combo.keep_every) for p in pareto_front(pts, rec))
        assert marked == expect

    summary = json.loads(files["summary"].read_text())
    assert summary["cells"] == len(pts)
    drops = summary["robustness"]["recognizers"]["dl"][ALL]
    assert drops["drop_qp"]["51"] == pytest.approx(0.51)
    assert drops["drop_keep_1_to_4_by_scale"]["8"] == pytest.approx(0.0)


def test_emit_report_is_byte_identical(tmp_path):
    pts = _grid_points()
    a = emit_report(pts, tmp_path / "a")
    b = emit_report(list(reversed(pts)), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes(), key
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "c")


# ---------------------------------------------------------------- sweep on a tiny corpus


@pytest.fixture(scope="module")
def tiny_run():
    from svrec.synth import GeneratorSpec

    spec = GeneratorSpec(class_count=3, clips_per_class_per_subject=1, subjects=2, width=64, height=64, fps=8)
    samples, _ = generate_dataset(spec)
    train_s = [s for s in samples if s.subject < spec.n_train_subjects]
    test_s = [s for s in samples if s.subject >= spec.n_train_subjects]
    groups = samples[0].groups
    bof = {g: train_bof(train_s, g, BofConfig(codebook_size=4)) for g in groups}
    net = NetworkConfig(outputs=3)
    deep = {g: train(train_s, net, TrainSpec(steps=5, min_seq_len=4, max_seq_len=8), g)[0] for g in groups}
    return test_s, bof, deep


def test_sweep_tiny_corpus(tiny_run):
    samples, bof, deep = tiny_run
    grid = SweepGrid(qps=(51, 0), scales=(1, 2), keeps=(2, 1))
    pts = run_sweep(samples, bof, deep, grid)
    assert [p.combo for p in pts] == grid.combos()
    assert len(pts) == 8
    for p in pts:
        assert p.bitrate_bps > 0 and p.clip_count == len(samples)
        for rec in ("bof", "dl"):
            assert set(p.accuracy[rec]) == {*samples[0].groups, ALL}
            assert all(0 <= v <= 1 for v in p.accuracy[rec].values())
    rate = {(p.combo.qp, p.combo.scale_factor, p.combo.keep_every): p.bitrate_bps for p in pts}
    for (q, s, k), r in rate.items():
        if q == 0:
            assert rate[(51, s, k)] <= r
        if s == 1:
            assert rate[(q, 2, k)] <= r
        if k == 1:
            assert rate[(q, s, 2)] <= r
    again = run_sweep(samples, bof, deep, grid)
    assert [(p.bitrate_bps, p.accuracy, p.dl_frame_accuracy) for p in pts] == \
        [(p.bitrate_bps, p.accuracy, p.dl_frame_accuracy) for p in again]


def test_sweep_parallel_matches_serial(tiny_run):
    samples, bof, deep = tiny_run
    grid = SweepGrid(qps=(0, 46), scales=(1,), keeps=(1, 4))
    serial = run_sweep(samples, bof, deep, grid, jobs=1)
    parallel = run_sweep(samples, bof, deep, grid, jobs=2)
    assert [(p.combo, p.bitrate_bps, p.accuracy) for p in serial] == \
        [(p.combo, p.bitrate_bps, p.accuracy) for p in parallel]


def test_sweep_errors(tiny_run):
    samples, bof, deep = tiny_run
    with pytest.raises(ValueError):
        run_sweep([], bof, deep)
    with pytest.raises(KeyError):
        run_sweep(samples, {}, deep)
