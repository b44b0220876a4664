"""Release gate: one test per shipped guarantee, each a single pass/fail line.

Unit suites cover the edge cases; these tests pin the headline behavior at
its stated tolerance and runtime budget. The desk-scale overfit runs the
full documented schedule, so this file takes a few minutes on one core.
"""
import math
import time
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from nisp.cbunet import (
    CBUnetConfig,
    Stage1Net,
    build_nets,
    load_weights,
    save_weights,
    stage1_estimate,
)
from nisp.imaging import (
    CFA_PATTERNS,
    BayerImage,
    ColorMatrix,
    EncodedImage,
    LinearRgbImage,
    XyzImage,
    apply_ccm,
    demosaic_bilinear,
    denoise_bilateral,
    load_camera_meta,
    read_pgm,
    recolorize_xyz,
    save_camera_meta,
    write_pgm,
)
from nisp.nn import (
    Tensor,
    angular_error_degrees,
    angular_loss,
    channel_attention,
    conv2d,
    fully_connected,
    global_avg_pool,
    hist_loss,
    l1_loss,
    max_pool2,
    mul,
    prelu,
    sigmoid,
    soft_histogram,
    sum_,
    total_loss,
)
from nisp.service import PAYLOAD_FIELDS, create_app
from nisp.training import (
    CSV_HEADER,
    TrainConfig,
    count_flops,
    count_params,
    flops_breakdown,
    generate_synthetic_dataset,
    load_dataset,
    psnr,
    run_full_ablation,
    synthetic_meta,
    train_stage1,
    train_stage2,
)
from nisp.training.train import _batch_hist, _stage2_sample

from tests._gradcheck import gradcheck, leaf
from tests._references import bilateral_loop, ccm_loop, demosaic_loop, psnr_loop

DOCS = Path(__file__).resolve().parents[1] / "docs" / "architecture.md"


def bits(net):
    return {k: v.data.tobytes() for k, v in net.params().items()}


def test_fast_paths_match_loop_oracles():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    for _ in range(100):
        h, w = 2 * int(rng.integers(2, 7)), 2 * int(rng.integers(2, 7))
        cfa = str(rng.choice(CFA_PATTERNS))
        mosaic = rng.random((h, w))
        out = demosaic_bilinear(BayerImage(mosaic, cfa)).planes
        assert np.max(np.abs(out - demosaic_loop(mosaic, cfa))) <= 1e-12
    for _ in range(100):
        planes = rng.random((3, 4, 5))
        m = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
        if abs(np.linalg.det(m)) <= 1e-3:
            m = np.eye(3)
        out = apply_ccm(LinearRgbImage(planes), ColorMatrix(m)).planes
        assert np.max(np.abs(out - ccm_loop(planes, m))) <= 1e-12
    for _ in range(100):
        planes = rng.random((3, 5, 5))
        ss = float(rng.uniform(0.3, 1.2))
        sr = float(rng.uniform(0.05, 0.3))
        out = denoise_bilateral(LinearRgbImage(planes), ss, sr).planes
        assert np.max(np.abs(out - bilateral_loop(planes, ss, sr))) <= 1e-9
    for _ in range(100):
        a = rng.integers(0, 256, size=(3, 4, 4), dtype=np.uint8)
        b = rng.integers(0, 256, size=(3, 4, 4), dtype=np.uint8)
        assert abs(psnr(EncodedImage(a), EncodedImage(b)) - psnr_loop(a, b)) <= 1e-9
    assert time.perf_counter() - t0 < 10.0


def test_loss_reference_angles_and_exact_additivity():
    cases = [
        ((1.0, 0.0, 0.0), (2.0, 0.0, 0.0), 0.0),
        ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), 90.0),
        # the gray axis against a primary: arccos(1/sqrt(3)), about 54.7356
        ((1.0, 1.0, 1.0), (0.0, 0.0, 1.0), math.degrees(math.acos(1.0 / math.sqrt(3.0)))),
    ]
    for a, b, want in cases:
        got = float(angular_loss(Tensor(np.array(a)), Tensor(np.array(b))).data)
        assert abs(got - want) < 1e-6

    rng = np.random.default_rng(3)
    a = rng.random((6, 6))
    assert float(hist_loss(Tensor(a), Tensor(a)).data) == 0.0
    shuffled = rng.permutation(a.ravel()).reshape(a.shape)
    assert float(hist_loss(Tensor(a), Tensor(shuffled)).data) == 0.0

    ang = angular_loss(Tensor(rng.random((2, 3)) + 0.2), Tensor(rng.random((2, 3)) + 0.2))
    l1 = l1_loss(Tensor(rng.random((2, 4))), Tensor(rng.random((2, 4))))
    hist = hist_loss(Tensor(rng.random(16)), Tensor(rng.random(16)))
    assert total_loss(ang, l1, hist).data == (ang.data + l1.data) + hist.data


def test_gradient_checks_cover_every_differentiable_op():
    rng = np.random.default_rng(42)
    t0 = time.perf_counter()

    def proj_sum(t, proj):
        return sum_(mul(t, Tensor(proj, dtype=t.data.dtype)))

    def signed_margin(shape, lo=0.05, hi=1.0):
        return rng.uniform(lo, hi, size=shape) * rng.choice([-1.0, 1.0], size=shape)

    x = leaf(rng.normal(size=(1, 2, 4, 4)))
    w = leaf(rng.normal(size=(2, 2, 3, 3)))
    b = leaf(rng.normal(size=2))
    proj = rng.normal(size=(1, 2, 4, 4))
    gradcheck(lambda xx, ww, bb: proj_sum(conv2d(xx, ww, bb, 1, 1), proj), [x, w, b])

    x = leaf(rng.normal(size=(2, 3)))
    w = leaf(rng.normal(size=(3, 5)))
    b = leaf(rng.normal(size=5))
    proj = rng.normal(size=(2, 5))
    gradcheck(lambda xx, ww, bb: proj_sum(fully_connected(xx, ww, bb), proj), [x, w, b])

    # kinked activations get inputs with |v| >= 0.05, far beyond the FD step
    x = leaf(signed_margin((2, 3, 4, 4)))
    proj = rng.normal(size=(2, 3, 4, 4))
    gradcheck(lambda t: proj_sum(prelu(t), proj), [x])

    x = leaf(rng.normal(size=(2, 3, 4, 4)))
    gradcheck(lambda t: proj_sum(sigmoid(t), proj), [x])

    # distinct values per pooling window so the argmax cannot flip under h
    x = leaf(rng.permutation(64).astype(np.float64).reshape(1, 1, 8, 8) * 0.1)
    proj = rng.normal(size=(1, 1, 4, 4))
    gradcheck(lambda t: proj_sum(max_pool2(t), proj), [x])

    x = leaf(rng.normal(size=(2, 3, 4, 4)))
    proj = rng.normal(size=(2, 3))
    gradcheck(lambda t: proj_sum(global_avg_pool(t), proj), [x])

    feats = leaf(rng.random((1, 3, 3, 3)) + 0.3)
    fc1_w = leaf(rng.normal(size=(3, 2)) * 0.5)
    fc1_b = leaf(rng.random(2) + 0.1)  # keep relu inputs positive
    fc2_w = leaf(rng.normal(size=(2, 3)) * 0.5)
    fc2_b = leaf(rng.normal(size=3) * 0.1)
    proj = rng.normal(size=(1, 3, 3, 3))
    gradcheck(
        lambda f, w1, b1, w2, b2: proj_sum(channel_attention(f, w1, b1, w2, b2), proj),
        [feats, fc1_w, fc1_b, fc2_w, fc2_b],
    )

    # histogram kernels are piecewise linear with kinks every 1/512; these
    # points sit at the midpoints, and h stays inside the 1/1024 margin
    def kink_free(n):
        slots = rng.choice(np.arange(2, 509), size=n, replace=False)
        return slots / 512.0 + 1.0 / 1024.0

    x = leaf(kink_free(12).reshape(3, 4))
    proj = rng.normal(size=(256,))
    gradcheck(lambda t: proj_sum(soft_histogram(t), proj), [x], h=4e-4)

    vals = kink_free(24)
    gradcheck(
        lambda p, q: hist_loss(p, q),
        [leaf(vals[:12].reshape(3, 4)), leaf(vals[12:].reshape(3, 4))],
        h=4e-4,
    )

    xv = rng.normal(size=(3, 4, 4))
    gradcheck(
        lambda p, q: l1_loss(p, q),
        [leaf(xv), leaf(xv + signed_margin(xv.shape, hi=0.5))],
    )

    gradcheck(
        lambda p, q: angular_loss(p, q),
        [leaf(rng.random((4, 3)) + 0.2), leaf(rng.random((4, 3)) + 0.2)],
    )

    assert time.perf_counter() - t0 < 60.0


def test_recolorize_preserves_chromaticity_ratios():
    rng = np.random.default_rng(11)
    for _ in range(50):
        planes = rng.random((3, 6, 7))
        target = rng.uniform(0.05, 1.0, size=(6, 7))
        out = recolorize_xyz(XyzImage(planes), target)
        mask = planes[1] > 0.01
        assert mask.any()
        for c in (0, 2):
            before = planes[c][mask] / planes[1][mask]
            after = out.planes[c][mask] / out.planes[1][mask]
            assert np.max(np.abs(after - before)) < 1e-4


def test_stage2_training_leaves_stage1_bitwise_frozen(tmp_path):
    root = tmp_path / "ds"
    generate_synthetic_dataset(root, count=2, height=32, width=32)
    pairs = load_dataset(root)
    config = TrainConfig.desk(
        stage1_steps=6, stage2_epochs=4, joint_epochs=1, batch_size=2, crop=32
    )
    stage1 = Stage1Net(config.net_config(), np.random.default_rng(config.seed))
    before = bits(stage1)
    train_stage2(pairs, stage1, config)
    assert bits(stage1) == before


def test_desk_overfit_hits_budgets_and_repeats_bitwise(tmp_path):
    root = tmp_path / "ds"
    generate_synthetic_dataset(root, count=4)
    pairs = load_dataset(root)
    config = TrainConfig.desk()
    t0 = time.perf_counter()

    stage1, _ = train_stage1(pairs, config)
    stage2, _ = train_stage2(pairs, stage1, config)

    errs = []
    for p in pairs:
        est = stage1_estimate(demosaic_bilinear(p.raw), stage1)
        errs.append(angular_error_degrees(est.as_array(), p.annotation.illuminant.as_array()))
    assert float(np.mean(errs)) < 2.0

    l1s = []
    for p in pairs:
        gray, target = _stage2_sample(p, stage1)
        x = gray[None, None].astype(np.float32)
        pred = stage2.forward(Tensor(x), Tensor(_batch_hist(x))).data[0, 0]
        l1s.append(float(np.mean(np.abs(pred - target.astype(np.float32)))))
    assert float(np.mean(l1s)) < 0.02

    # same seed, same budget, bitwise-identical weights on a fresh run
    short = TrainConfig.desk(stage1_steps=30, stage2_epochs=12)
    runs = []
    for _ in range(2):
        s1, _ = train_stage1(pairs, short)
        s2, _ = train_stage2(pairs, s1, short)
        runs.append((bits(s1), bits(s2)))
    assert runs[0] == runs[1]

    assert time.perf_counter() - t0 < 300.0


def test_counts_match_documented_tables():
    s1, s2 = build_nets(CBUnetConfig.tiny())
    assert count_params(s1) == 33_875
    assert count_params(s2) == 52_113
    assert count_params([s1, s2]) == 85_988
    assert count_flops(s1, (64, 64)) == 69_969_771
    assert count_flops(s2, (64, 64)) == 67_659_720
    assert count_flops([s1, s2], (64, 64)) == 137_629_491

    bd64 = flops_breakdown([s1, s2], (64, 64))
    assert bd64["conv"] == 136_839_168
    assert bd64["fc"] == 40_448
    assert bd64["elementwise"] == 749_875

    # convolution cost is quadratic in linear size; the fc head is not
    bd128 = flops_breakdown([s1, s2], (128, 128))
    assert bd128["conv"] == 4 * bd64["conv"] == 547_356_672
    assert bd128["fc"] == bd64["fc"]

    text = DOCS.read_text()
    for figure in ("33,875", "52,113", "85,988", "137,629,491", "547,356,672"):
        assert figure in text


def test_persistence_round_trips_byte_stable(tmp_path):
    config = CBUnetConfig.tiny()
    s1, s2 = build_nets(config, seed=5)
    p1 = tmp_path / "a.nsw"
    save_weights(p1, config, s1, s2)
    loaded_config, l1net, l2net = load_weights(p1)
    for fresh, loaded in ((s1, l1net), (s2, l2net)):
        assert bits(loaded) == bits(fresh)
    p2 = tmp_path / "b.nsw"
    save_weights(p2, loaded_config, l1net, l2net)
    assert p1.read_bytes() == p2.read_bytes()

    rng = np.random.default_rng(13)
    arr = rng.integers(0, 65536, size=(10, 12), dtype=np.uint16)
    f1, f2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
    write_pgm(f1, arr)
    back = read_pgm(f1)
    assert np.array_equal(back, arr)
    write_pgm(f2, back)
    assert f1.read_bytes() == f2.read_bytes()

    meta = synthetic_meta()
    save_camera_meta(tmp_path / "a.meta.json", meta)
    loaded = load_camera_meta(tmp_path / "a.meta.json")
    assert (loaded.black_level, loaded.white_level, loaded.cfa) == (
        meta.black_level,
        meta.white_level,
        meta.cfa,
    )
    assert np.array_equal(loaded.ccm.values, meta.ccm.values)
    save_camera_meta(tmp_path / "b.meta.json", loaded)
    assert (tmp_path / "a.meta.json").read_bytes() == (tmp_path / "b.meta.json").read_bytes()

    root = tmp_path / "ds"
    generate_synthetic_dataset(root, count=1, height=32, width=32)
    client = TestClient(create_app(root))
    posted = client.post(
        "/api/images/synth0/annotation",
        json={"rect": {"x": 4, "y": 4, "w": 8, "h": 8}, "annotator": "gate"},
    )
    assert posted.status_code == 200
    fetched = client.get("/api/images/synth0/annotation")
    assert posted.content == fetched.content
    # stored payloads sort keys for byte stability; the field set is the contract
    assert sorted(fetched.json().keys()) == sorted(PAYLOAD_FIELDS)


def test_ablation_harness_emits_all_table_rows(tmp_path):
    root = tmp_path / "ds"
    generate_synthetic_dataset(root, count=2, height=32, width=32)
    pairs = load_dataset(root)
    config = TrainConfig.desk(
        stage1_steps=4, stage2_epochs=2, joint_epochs=1, batch_size=2, crop=32
    )
    out = tmp_path / "ablation.csv"
    rows = run_full_ablation(pairs, config, out)
    assert [r["variant"] for r in rows] == [
        "unet",
        "unet_ca",
        "two_stage_hist",
        "two_stage_ca_hist",
        "loss_l1",
        "loss_l1_hist",
        "loss_l1_hist_angular",
    ]
    lines = out.read_text().strip().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 8
    for line in lines[1:]:
        _, db, params, flops = line.split(",")
        assert math.isfinite(float(db)) or float(db) == math.inf
        assert int(params) > 0 and int(flops) > 0
