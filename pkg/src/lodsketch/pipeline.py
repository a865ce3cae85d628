"""Batch stages over a dataset manifest.

Work items are independent and keyed by (group, lod, view, modality), so
the output tree does not depend on worker count or completion order.
Each stage returns a :class:`StageResult`; the manifest is rewritten once
at the end, sorted.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dataset as ds
from .capture import DEFAULT_PLAN, OrbitPlan, camera_pose
from .dataset import Manifest, ManifestEntry, checksum_bytes, checksum_file, entry_path
from .imagecore import to_grayscale
from .metrics import SsimConfig, evaluate_pair, summarize, write_reports_jsonl, write_summary_csv
from .pngio import read_png, write_png
from .reduce import (
    LOD1_PROMPT,
    LOD2_PROMPT,
    DepthProvider,
    ProxyBackend,
    abstract_lod2_to_lod1,
    estimate_depth,
    make_backend,
    reduce_lod3_to_lod2,
)
from .sketchpipe import Lod1SketchParams, SketchParams, extract_full_detail_sketch, extract_lod1_sketch
from .synthrender import BuildingSpec, camera_setup, generate_building, render

log = logging.getLogger(__name__)


@dataclass
class StageResult:
    written: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a base seed and item identifiers."""
    words = []
    for p in parts:
        if isinstance(p, str):
            words.extend(p.encode("utf-8"))
        else:
            words.append(int(p) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def run_pool(fn, items, jobs: int = 1, threads: bool = False):
    """Map ``fn`` over ``items``; results come back in item order regardless of jobs."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    pool_cls = ThreadPoolExecutor if threads else ProcessPoolExecutor
    with pool_cls(max_workers=jobs) as pool:
        chunk = 1 if threads else max(1, len(items) // (jobs * 4))
        if threads:
            return list(pool.map(fn, items))
        return list(pool.map(fn, items, chunksize=chunk))


def _entry(root, rel, data: bytes, shape, group, lod, view, modality, plan: OrbitPlan, params):
    az, el = plan.angles(view)
    h, w = shape[:2]
    return ManifestEntry(group, lod, view, az, el, modality, rel, int(w), int(h), checksum_bytes(data), params)


def _up_to_date(root, man: Manifest, key, params) -> bool:
    e = man.find(*key)
    if e is None or e.params != params:
        return False
    path = os.path.join(root, e.path)
    return os.path.exists(path) and checksum_file(path) == e.checksum


# -- synth ----------------------------------------------------------------------

def _synth_task(task):
    root, gid, bseed, lod, view, size, fov, plan_d = task
    plan = OrbitPlan.from_dict(plan_d)
    spec = BuildingSpec.from_seed(bseed)
    cam = camera_setup(spec)
    az, el = plan.angles(view)
    pose = camera_pose(az, el, cam["radius"], cam["target"], view_index=view)
    r = render(generate_building(spec, lod), pose, fov, size, size, cam["near"], cam["far"])
    params = {"stage": "synth", "building_seed": bseed, "fov": fov, "size": size,
              "near": cam["near"], "far": cam["far"], "radius": cam["radius"],
              "depth_encoding": "uint16 linear eye depth over [near, far]; 65535 = background"}
    out = []
    for modality, arr in (("rgb", r.rgb), ("depth", r.depth)):
        rel = entry_path(gid, lod, modality, view)
        data = write_png(os.path.join(root, rel), arr)
        out.append(_entry(root, rel, data, arr.shape, gid, lod, view, modality, plan, params))
    return out


def synth(out_root, groups: int, seed: int = 0, size: int = 128, jobs: int = 1, fov: float = 50.0,
          plan: OrbitPlan = DEFAULT_PLAN) -> tuple[Manifest, StageResult]:
    os.makedirs(out_root, exist_ok=True)
    tasks = []
    for g in range(groups):
        gid = f"g{g:03d}"
        bseed = derive_seed(seed, g)
        for lod in ds.LODS:
            for view in range(plan.n_views):
                tasks.append((str(out_root), gid, bseed, lod, view, size, fov, plan.to_dict()))
    res = StageResult()
    entries = []
    for out in run_pool(_safe(_synth_task), tasks, jobs):
        if isinstance(out, dict):
            res.failures.append(out)
        else:
            entries.extend(out)
            res.written += len(out)
    man = Manifest(entries, header={"orbit": plan.to_dict(), "seed": seed}, root=str(out_root))
    man.write()
    return man, res


class _safe:
    """Picklable wrapper turning exceptions into failure records."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, task):
        try:
            return self.fn(task)
        except Exception as exc:  # noqa: BLE001 - recorded per entry, batch continues
            return {"task": repr(task[:6] if isinstance(task, tuple) else task)[:300], "error": f"{type(exc).__name__}: {exc}"}


# -- sketch ---------------------------------------------------------------------

def _sketch_task(task):
    root, e, level, params_d, lod1_d, plan_d = task
    src = read_png(os.path.join(root, e["path"]))
    if level == 1:
        out = extract_lod1_sketch(to_grayscale(src), Lod1SketchParams(**lod1_d))
        params = {"stage": "sketch", "level": 1, "lod1_params": lod1_d}
    else:
        out = extract_full_detail_sketch(src, SketchParams.from_dict(params_d))
        params = {"stage": "sketch", "level": level, "sketch_params": params_d}
    rel = entry_path(e["group_id"], level, "sketch", e["view_index"])
    data = write_png(os.path.join(root, rel), out)
    return [_entry(root, rel, data, out.shape, e["group_id"], level, e["view_index"], "sketch",
                   OrbitPlan.from_dict(plan_d), params)]


def _sketch_params_record(level, sp: SketchParams, lp: Lod1SketchParams) -> dict:
    if level == 1:
        return {"stage": "sketch", "level": 1, "lod1_params": lp.to_dict()}
    return {"stage": "sketch", "level": level, "sketch_params": sp.to_dict()}


def sketch(man: Manifest, level: int, params: SketchParams | None = None,
           lod1: Lod1SketchParams | None = None, jobs: int = 1) -> StageResult:
    params = params or SketchParams()
    lod1 = lod1 or Lod1SketchParams()
    root = man.root
    record = _sketch_params_record(level, params, lod1)
    res = StageResult()
    tasks = []
    for e in man.select(lod=level, modality="rgb"):
        if _up_to_date(root, man, (e.group_id, level, e.view_index, "sketch"), record):
            res.skipped += 1
            continue
        tasks.append((root, e.to_dict(), level, params.to_dict(), lod1.to_dict(), man.plan.to_dict()))
    _collect(man, run_pool(_safe(_sketch_task), tasks, jobs), res)
    man.write()
    return res


def _collect(man: Manifest, outputs, res: StageResult):
    new = []
    for out in outputs:
        if isinstance(out, dict):
            res.failures.append(out)
        else:
            new.extend(out)
            res.written += len(out)
    man.upsert(new)


# -- reduce -----------------------------------------------------------------------

@dataclass
class ReduceConfig:
    stage: str = "3to2"
    backend: str = "proxy"
    reducer_url: str | None = None
    depth_provider: str = "rendered"
    depth_url: str | None = None
    prompt: str | None = None
    seed: int = 0
    sketch_params: SketchParams = field(default_factory=SketchParams)
    lod1_params: Lod1SketchParams = field(default_factory=Lod1SketchParams)
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 0.5
    max_in_flight: int = 4

    def backend_kwargs(self) -> dict:
        if self.backend == "remote":
            return {"timeout": self.timeout, "retries": self.retries, "backoff": self.backoff,
                    "max_in_flight": self.max_in_flight}
        return {}


_WORKER_BACKEND = {}


def _backend_for(cfg: ReduceConfig):
    key = (cfg.backend, cfg.reducer_url)
    if key not in _WORKER_BACKEND:
        if cfg.backend == "proxy":
            _WORKER_BACKEND[key] = ProxyBackend()
        else:
            _WORKER_BACKEND[key] = make_backend("remote", cfg.reducer_url, **cfg.backend_kwargs())
    return _WORKER_BACKEND[key]


def _reduce_3to2_task(task):
    root, e, cfg, backend, record = task
    backend = backend or _backend_for(cfg)
    g, v = e["group_id"], e["view_index"]
    src = read_png(os.path.join(root, e["path"]))
    seed = derive_seed(cfg.seed, g, v, 2)
    gen = reduce_lod3_to_lod2(src, backend, record["prompt"], seed)
    sk = extract_full_detail_sketch(gen, cfg.sketch_params)
    plan = OrbitPlan.from_dict(record["orbit"])
    params = {k: val for k, val in record.items() if k != "orbit"}
    params["seed"] = seed
    out = []
    for modality, arr in (("gen_rgb", gen), ("gen_sketch", sk)):
        rel = entry_path(g, 2, modality, v)
        data = write_png(os.path.join(root, rel), arr)
        out.append(_entry(root, rel, data, arr.shape, g, 2, v, modality, plan, params))
    return out


def _reduce_2to1_task(task):
    root, item, cfg, backend, record = task
    backend = backend or _backend_for(cfg)
    g, v = item["group_id"], item["view_index"]
    sketch_img = to_grayscale(read_png(os.path.join(root, item["path"])))
    if cfg.depth_provider == "rendered" and item.get("depth_path"):
        depth = read_png(os.path.join(root, item["depth_path"]))
        used = "rendered"
    else:
        # rendered depth missing on disk degrades to the planar plane
        used = "remote-estimator" if cfg.depth_provider in ("remote", "remote-estimator") else "planar-fallback"
        depth = estimate_depth(sketch_img, DepthProvider(used, endpoint=cfg.depth_url))
    seed = derive_seed(cfg.seed, g, v, 1)
    gen = abstract_lod2_to_lod1(sketch_img, depth, backend, seed, prompt=record["prompt"])
    sk = extract_lod1_sketch(gen, cfg.lod1_params)
    plan = OrbitPlan.from_dict(record["orbit"])
    params = {k: val for k, val in record.items() if k != "orbit"}
    params.update(seed=seed, source=item["path"], depth_provider=used,
                  depth_fallback=used == "planar-fallback")
    out = []
    for modality, arr in (("gen_rgb", gen), ("gen_sketch", sk)):
        rel = entry_path(g, 1, modality, v)
        data = write_png(os.path.join(root, rel), arr)
        out.append(_entry(root, rel, data, arr.shape, g, 1, v, modality, plan, params))
    return out


def reduce(man: Manifest, cfg: ReduceConfig, jobs: int = 1) -> StageResult:
    if cfg.stage not in ("3to2", "2to1"):
        raise ValueError(f"unknown reduce stage {cfg.stage!r}")
    root = man.root
    res = StageResult()
    remote = cfg.backend == "remote"
    backend = make_backend("remote", cfg.reducer_url, **cfg.backend_kwargs()) if remote else None
    if cfg.backend not in ("proxy", "remote"):
        raise ValueError(f"unknown backend {cfg.backend!r}")
    backend_record = backend.provenance() if remote else ProxyBackend().provenance()
    if cfg.stage == "3to2":
        record = {"stage": "reduce-3to2", "backend": backend_record, "prompt": cfg.prompt or LOD2_PROMPT,
                  "sketch_params": cfg.sketch_params.to_dict(), "base_seed": cfg.seed}
        sources = man.select(lod=3, modality="rgb")
        fn, out_lod = _reduce_3to2_task, 2
    else:
        record = {"stage": "reduce-2to1", "backend": backend_record, "prompt": cfg.prompt or LOD1_PROMPT,
                  "lod1_params": cfg.lod1_params.to_dict(), "base_seed": cfg.seed,
                  "requested_depth_provider": cfg.depth_provider}
        sources = []
        for g in man.groups:
            views = {e.view_index for e in man.select(lod=2, group_id=g) if e.modality in ("sketch", "gen_sketch")}
            for v in sorted(views):
                e = man.find(g, 2, v, "gen_sketch") or man.find(g, 2, v, "sketch")
                sources.append(e)
        fn, out_lod = _reduce_2to1_task, 1
    tasks = []
    for e in sources:
        item = e.to_dict()
        check = dict(record)
        if cfg.stage == "2to1":
            d = man.find(e.group_id, 2, e.view_index, "depth")
            item["depth_path"] = d.path if d is not None else None
        if _reduce_done(root, man, e.group_id, out_lod, e.view_index, check, cfg.seed):
            res.skipped += 1
            continue
        record_with_plan = dict(record, orbit=man.plan.to_dict())
        tasks.append((root, item, cfg, backend, record_with_plan))
    outputs = run_pool(_safe(fn), tasks, cfg.max_in_flight if remote else jobs, threads=remote)
    _collect(man, outputs, res)
    fallbacks = sum(1 for e in man.select(lod=out_lod, modality="gen_sketch")
                    if e.params and e.params.get("depth_fallback"))
    res.notes["depth_fallbacks"] = fallbacks
    man.write()
    return res


def _reduce_done(root, man, group, lod, view, record, base_seed) -> bool:
    for modality in ("gen_rgb", "gen_sketch"):
        e = man.find(group, lod, view, modality)
        if e is None or e.params is None:
            return False
        if any(e.params.get(k) != v for k, v in record.items()):
            return False
        path = os.path.join(root, e.path)
        if not os.path.exists(path) or checksum_file(path) != e.checksum:
            return False
    return True


# -- eval -----------------------------------------------------------------------

STAGE_PAIRS = {
    ("3to2", "consecutive"): ((3, "sketch"), (2, "gen_sketch")),
    ("3to2", "groundtruth"): ((2, "sketch"), (2, "gen_sketch")),
    ("2to1", "consecutive"): ((2, "gen_sketch"), (1, "gen_sketch")),
    ("2to1", "groundtruth"): ((1, "sketch"), (1, "gen_sketch")),
}


def evaluate(man: Manifest, stage: str, compare: str = "consecutive", out_dir=None, bin_thr: int = 128,
             cfg: SsimConfig | None = None, jobs: int = 1, lod: int = 3, modality: str = "sketch"):
    """Per-pair JSONL reports plus a mean/median CSV summary for one stage."""
    if stage == "self":
        (la, ma), (lb, mb) = (lod, modality), (lod, modality)
        pairs = [(e, e) for e in man.select(lod=lod, modality=modality)]
        skipped = 0
    else:
        if (stage, compare) not in STAGE_PAIRS:
            raise ValueError(f"unknown eval stage/compare {stage}/{compare}")
        (la, ma), (lb, mb) = STAGE_PAIRS[(stage, compare)]
        pairs, skipped = ds.pair_iter(man, la, lb, ma, mb)
    tasks = [(man.root, a.to_dict(), b.to_dict(), bin_thr, cfg or SsimConfig(), stage, compare) for a, b in pairs]
    reports = run_pool(_eval_task, tasks, jobs)
    name = stage if stage == "self" else f"{stage}_{compare}"
    out_dir = out_dir or os.path.join(man.root, "reports")
    os.makedirs(out_dir, exist_ok=True)
    jsonl = os.path.join(out_dir, f"eval_{name}.jsonl")
    csv_path = os.path.join(out_dir, f"summary_{name}.csv")
    write_reports_jsonl(jsonl, reports)
    rows = summarize({name: reports})
    write_summary_csv(csv_path, rows)
    return reports, rows, skipped, (jsonl, csv_path)


def _eval_task(task):
    root, a, b, bin_thr, cfg, stage, compare = task
    ia = to_grayscale(read_png(os.path.join(root, a["path"])))
    ib = to_grayscale(read_png(os.path.join(root, b["path"])))
    key = {"group_id": a["group_id"], "view_index": a["view_index"], "stage": stage, "compare": compare,
           "a": a["path"], "b": b["path"]}
    return evaluate_pair(ia, ib, bin_thr, cfg, key).to_dict()
