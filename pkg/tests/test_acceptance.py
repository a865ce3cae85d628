"""Acceptance gate: one test per primary criterion, each reporting a PASS/FAIL line.

The lines are collected in ``RESULTS`` and printed in the pytest terminal
summary by ``conftest.py``, so they show up without ``-s``.
"""
from __future__ import annotations

import os
import shutil
import time

import numpy as np
import pytest

from lodsketch import imagecore as ic
from lodsketch import metrics as mt
from lodsketch import pipeline
from lodsketch.capture import DEFAULT_PLAN, generate_orbit_plan
from lodsketch.cli import main as cli_main
from lodsketch.dataset import Manifest, checksum_file, simulate_manifest, validate
from lodsketch.reduce.stub import serve_stub

import oracles
from progressive import run_building

RESULTS: list[str] = []


def gate(name: str, ok: bool, detail: str = "") -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    assert ok, f"{name}: {detail}"


# -- normalization arithmetic ---------------------------------------------------------

def test_normalization_arithmetic():
    checks = [
        ("diagonal(512,512)", mt.diagonal(512, 512), 724.08),
        ("normalized_hd(181.90)", mt.normalized_hd(181.90, 512, 512), 25.1),
        ("normalized_hd(441.65)", mt.normalized_hd(441.65, 512, 512), 61.0),
        ("mse_fraction(5150)", mt.mse_fraction(5150), 7.9),
        ("mse_fraction(4240)", mt.mse_fraction(4240), 6.5),
    ]
    bad = [f"{n}={v:.4f} (want {w}±0.05)" for n, v, w in checks if abs(v - w) > 0.05]
    detail = ", ".join(f"{n}={v:.4f}" for n, v, _ in checks)
    gate("normalization arithmetic", not bad, "; ".join(bad) or detail)


# -- full pipeline runs shared by the count-law and determinism criteria ------------------

def _tree_checksums(root) -> dict:
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            full = os.path.join(dirpath, name)
            out[os.path.relpath(full, root)] = checksum_file(full)
    return out


def _full_pipeline(root, jobs: int) -> dict:
    argv = ["--jobs", str(jobs), "--seed", "7"]
    counts = {}
    assert cli_main(["synth", "--out", str(root), "--groups", "1", "--size", "128", *argv]) == 0
    man = Manifest.read(root)
    counts["files"] = sum(len(f) for _, _, f in os.walk(root)) - 1  # minus manifest.jsonl
    counts["poses"] = {lod: len(man.select(lod=lod, modality="rgb")) for lod in (1, 2, 3)}
    counts["per_model"] = validate(man).images_per_model
    counts["valid"] = validate(man).ok
    m = ["--manifest", str(root)]
    for level in ("3", "2", "1"):
        assert cli_main(["sketch", *m, "--level", level, *argv]) == 0
    for stage in ("3to2", "2to1"):
        assert cli_main(["reduce", *m, "--stage", stage, "--backend", "proxy", *argv]) == 0
        for compare in ("consecutive", "groundtruth"):
            assert cli_main(["eval", *m, "--stage", stage, "--compare", compare, *argv]) == 0
    return counts


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    t0 = time.perf_counter()
    counts_a = _full_pipeline(base / "run_a", jobs=1)
    t_a = time.perf_counter() - t0
    counts_b = _full_pipeline(base / "run_b", jobs=8)
    return {"a": base / "run_a", "b": base / "run_b", "counts": counts_a, "counts_b": counts_b,
            "seconds": time.perf_counter() - t0, "seconds_a": t_a}


def test_dataset_count_laws(pipeline_runs):
    c = pipeline_runs["counts"]
    sim = simulate_manifest(50)
    rgb = sum(1 for e in sim if e.modality == "rgb")
    depth = sum(1 for e in sim if e.modality == "depth")
    ok = (c["files"] == 1512 and all(v == 252 for v in c["poses"].values())
          and set(c["per_model"].values()) == {504} and c["valid"]
          and len(sim) == 75600 and rgb == 37800 and depth == 37800 and validate(sim).ok)
    gate("dataset count laws", ok,
         f"files={c['files']} poses={c['poses']} per_model={sorted(set(c['per_model'].values()))} "
         f"sim total={len(sim)} rgb={rgb} depth={depth} (synth+pipeline {pipeline_runs['seconds_a']:.0f}s)")


def test_determinism(pipeline_runs):
    a = _tree_checksums(pipeline_runs["a"])
    b = _tree_checksums(pipeline_runs["b"])
    diff = sorted(set(a) ^ set(b)) + sorted(k for k in set(a) & set(b) if a[k] != b[k])
    gate("determinism (jobs 1 vs 8, bit-identical trees)", not diff and len(a) > 1512,
         f"{len(a)} files compared, {len(diff)} differ, both runs {pipeline_runs['seconds']:.0f}s")


# -- equation identities ------------------------------------------------------------

def test_equation_identities():
    rng = np.random.default_rng(2024)
    fails = []
    for _ in range(20):
        h, w = rng.integers(3, 40, 2)
        e = rng.integers(0, 256, (h, w)).astype(np.uint8)
        g = rng.integers(0, 256, (h, w)).astype(np.uint8)
        if not np.array_equal(ic.blend_shadow(e, g, 0.0), e):
            fails.append("alpha=0")
        if not np.array_equal(ic.blend_shadow(e, g, 1.0), g):
            fails.append("alpha=1")
        s = ic.blend_shadow(e, g, float(rng.random()))
        if not np.array_equal(ic.enhance_contrast(np.rint(s), 0.0), np.rint(s)):
            fails.append("beta=0")
        if not np.array_equal(ic.enhance_contrast(e, 0.0), e):
            fails.append("beta=0 (integer S)")
    for beta in np.concatenate([[0.0, 0.5, 1.0, 10.0, 1e6], rng.random(20) * 50]):
        if not np.all(ic.enhance_contrast(np.full((5, 7), 128.0), float(beta)) == 128):
            fails.append(f"S=128 beta={beta}")
    if ic.gradient_magnitude(np.array([3.0]), np.array([4.0]))[0] != 5.0:
        fails.append("|(3,4)|")
    gate("equation identities", not fails, ", ".join(sorted(set(fails))) or "alpha 0/1, beta 0, S=128, |(3,4)|=5 exact")


# -- oracle equivalence ---------------------------------------------------------------

def test_oracle_equivalence():
    rng = np.random.default_rng(77)
    ssim_err = 0.0
    for _ in range(50):
        a = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        b = rng.integers(0, 256, (16, 16)).astype(np.uint8) if rng.random() < 0.5 else \
            np.clip(a.astype(int) + rng.integers(-40, 41, (16, 16)), 0, 255).astype(np.uint8)
        ssim_err = max(ssim_err, abs(mt.ssim(a, b) - oracles.ssim_oracle(a, b)))
    hd_bad = 0
    for _ in range(100):
        h, w = rng.integers(8, 40, 2)
        ma = np.zeros((h, w), bool)
        mb = np.zeros((h, w), bool)
        for m in (ma, mb):
            n = int(rng.integers(1, 201))
            m[rng.integers(0, h, n), rng.integers(0, w, n)] = True
        hd_bad += mt.hausdorff(ma, mb) != oracles.hausdorff_oracle(ma, mb)
    bh_bad = 0
    n_bh = 0
    for seed in range(10):
        img = np.random.default_rng(seed).integers(0, 256, (7, 7)).astype(np.uint8)
        for shape in ("square", "cross"):
            for size in (3, 5):
                n_bh += 1
                got = ic.morphology(img, "blackhat", ic.StructuringElement(shape, size))
                bh_bad += not np.array_equal(got.astype(np.int64), oracles.blackhat_oracle(img, shape, size))
    ok = ssim_err < 1e-9 and hd_bad == 0 and bh_bad == 0
    gate("oracle equivalence", ok,
         f"ssim max|d|={ssim_err:.2e} over 50, hausdorff mismatches={hd_bad}/100, blackhat mismatches={bh_bad}/{n_bh}")


# -- metric properties ------------------------------------------------------------------

def test_metric_properties():
    rng = np.random.default_rng(5)
    fails = []
    for _ in range(20):
        x = rng.integers(0, 256, (24, 24)).astype(np.uint8)
        y = rng.integers(0, 256, (24, 24)).astype(np.uint8)
        if mt.ssim(x, x) != 1.0:
            fails.append("ssim(x,x)")
        if mt.mse(x, x) != 0.0:
            fails.append("mse(x,x)")
        if mt.ssim(x, y) != mt.ssim(y, x):
            fails.append("ssim symmetry")
        if mt.mse(x, y) != mt.mse(y, x):
            fails.append("mse symmetry")
        mx, my = x < 40, y < 40
        if mt.hausdorff(mx, mx) != 0.0:
            fails.append("hd(A,A)")
        if mt.hausdorff(mx, my) != mt.hausdorff(my, mx):
            fails.append("hd symmetry")
    tri_bad = 0
    for _ in range(200):
        ms = []
        for _ in range(3):
            m = np.zeros((30, 30), bool)
            n = int(rng.integers(1, 60))
            m[rng.integers(0, 30, n), rng.integers(0, 30, n)] = True
            ms.append(m)
        a, b, c = ms
        tri_bad += mt.hausdorff(a, c) > mt.hausdorff(a, b) + mt.hausdorff(b, c) + 1e-12
    gate("metric properties", not fails and tri_bad == 0,
         ", ".join(sorted(set(fails))) or f"identity+symmetry ok, triangle violations={tri_bad}/200")


# -- progressive simplification ---------------------------------------------------------

def test_progressive_simplification():
    views = [v for seed in range(10) for v in run_building(seed, 128)]
    ordered = sum(v.ordered for v in views)
    min_iou = min(min(v.iou_32, v.iou_21) for v in views)
    frac = ordered / len(views)
    gate("progressive simplification", frac >= 0.95 and min_iou >= 0.90,
         f"{ordered}/{len(views)} views LoD1<=LoD2<=LoD3, min consecutive bbox IoU={min_iou:.3f}")


# -- wire protocol ----------------------------------------------------------------------

def test_wire_protocol(small_dataset, tmp_path):
    root = tmp_path / "ds"
    shutil.copytree(small_dataset, root)
    m = ["--manifest", str(root)]
    with serve_stub(fail_first=1) as (url, state):
        code = cli_main(["reduce", *m, "--stage", "3to2", "--backend", "remote", "--reducer-url", url,
                         "--backoff", "0.01", "--max-in-flight", "1"])
        n_src = len(Manifest.read(root).select(lod=3, modality="rgb"))
        calls_fault = state.calls
    man = Manifest.read(root)
    mismatched = 0
    for e in man.select(lod=2, modality="gen_rgb"):
        src = man.find(e.group_id, 3, e.view_index, "rgb")
        with open(man.abspath(src), "rb") as fa, open(man.abspath(e), "rb") as fb:
            mismatched += fa.read() != fb.read()
    # a stalled first response must be abandoned at the timeout and retried
    root2 = tmp_path / "ds2"
    shutil.copytree(small_dataset, root2)
    with serve_stub(delay_first=1, delay=2.0) as (url, state2):
        t0 = time.perf_counter()
        code2 = cli_main(["reduce", "--manifest", str(root2), "--stage", "3to2", "--backend", "remote",
                          "--reducer-url", url, "--timeout", "0.5", "--backoff", "0.01", "--max-in-flight", "1"])
        elapsed = time.perf_counter() - t0
        calls_timeout = state2.calls
    ok = (code == 0 and mismatched == 0 and calls_fault == n_src + 1
          and code2 == 0 and calls_timeout == n_src + 1)
    gate("wire protocol", ok,
         f"echo bytewise mismatches={mismatched}/{n_src}, calls with 1 injected 503={calls_fault} "
         f"(expect {n_src + 1}), calls with 1 stalled request={calls_timeout} in {elapsed:.1f}s")


# -- orbit geometry ------------------------------------------------------------------------

def test_orbit_geometry():
    poses = generate_orbit_plan(DEFAULT_PLAN)
    worst_orth = max(np.abs(p.rotation.T @ p.rotation - np.eye(3)).max() for p in poses)
    worst_det = max(abs(np.linalg.det(p.rotation) - 1) for p in poses)
    worst_rad = max(abs(np.linalg.norm(p.position - np.array(DEFAULT_PLAN.target)) - DEFAULT_PLAN.radius)
                    for p in poses)
    ok = len(poses) == 252 and worst_orth < 1e-9 and worst_det < 1e-9 and worst_rad < 1e-9
    gate("orbit geometry", ok,
         f"{len(poses)} poses, max|RtR-I|={worst_orth:.1e}, max|det-1|={worst_det:.1e}, max radius err={worst_rad:.1e}")
