"""Dataset manifest: scanning, validation, cross-LoD pairing and alignment checks.

Layout on disk::

    <root>/<group>/lod{1,2,3}/<modality>/<view:03>.png
    <root>/manifest.jsonl

The manifest is JSON Lines: one header object followed by one entry per file.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .capture import DEFAULT_PLAN, OrbitPlan
from .pngio import png_size, read_png
from .synthrender import bbox_iou

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CHECKSUM_ALGO = "blake2b-64"
MANIFEST_NAME = "manifest.jsonl"
LODS = (1, 2, 3)
IMAGE_MODALITIES = ("rgb", "depth")
MODALITIES = ("rgb", "depth", "sketch", "gen_rgb", "gen_sketch")
_MOD_ORDER = {m: i for i, m in enumerate(MODALITIES)}
_PATH_RE = re.compile(r"^lod([123])/([a-z_]+)/(\d{3,})\.png$")


def checksum_bytes(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def checksum_file(path) -> str:
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def entry_path(group_id: str, lod: int, modality: str, view_index: int) -> str:
    return f"{group_id}/lod{lod}/{modality}/{view_index:03d}.png"


@dataclass
class ManifestEntry:
    group_id: str
    lod: int
    view_index: int
    azimuth: float
    elevation: float
    modality: str
    path: str
    width: int
    height: int
    checksum: str
    params: dict | None = None

    @property
    def key(self) -> tuple:
        return (self.group_id, self.lod, self.view_index, self.modality)

    def sort_key(self) -> tuple:
        return (self.group_id, self.lod, self.view_index, _MOD_ORDER.get(self.modality, 99), self.modality)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    header: dict = field(default_factory=dict)
    root: str | None = None
    errors: list[dict] = field(default_factory=list)
    warnings: int = 0

    def __post_init__(self):
        self.header = {"schema_version": self.schema_version, "checksum": CHECKSUM_ALGO,
                       "layout": "<group>/lod{1,2,3}/<modality>/<view:03>.png", **self.header}
        self._reindex()

    def _reindex(self):
        self.entries.sort(key=ManifestEntry.sort_key)
        self._index = {e.key: e for e in self.entries}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def find(self, group_id, lod, view_index, modality) -> ManifestEntry | None:
        return self._index.get((group_id, int(lod), int(view_index), modality))

    def upsert(self, entries) -> None:
        for e in entries:
            self._index[e.key] = e
        self.entries = list(self._index.values())
        self._reindex()

    def select(self, lod=None, modality=None, group_id=None) -> list[ManifestEntry]:
        return [e for e in self.entries
                if (lod is None or e.lod == lod) and (modality is None or e.modality == modality)
                and (group_id is None or e.group_id == group_id)]

    @property
    def groups(self) -> list[str]:
        return sorted({e.group_id for e in self.entries})

    def abspath(self, entry: ManifestEntry) -> str:
        return os.path.join(self.root or ".", entry.path)

    def write(self, path=None) -> Path:
        path = Path(path) if path else Path(self.root or ".") / MANIFEST_NAME
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(e.to_dict(), sort_keys=True) for e in self.entries]
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(path)
        return path

    @classmethod
    def read(cls, path) -> "Manifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        with open(path, encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or "schema_version" not in lines[0]:
            raise ValueError(f"{path} has no manifest header")
        header = lines[0]
        if header["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported manifest schema {header['schema_version']}")
        entries = [ManifestEntry(**d) for d in lines[1:]]
        return cls(entries, header["schema_version"], header, root=str(path.parent))

    @property
    def plan(self) -> OrbitPlan:
        if "orbit" in self.header:
            return OrbitPlan.from_dict(self.header["orbit"])
        return DEFAULT_PLAN


def _scan_one(root: Path, rel: str, plan: OrbitPlan, group: str, lod: int, modality: str, view: int):
    full = root / rel
    try:
        checksum = checksum_file(full)
        w, h = png_size(full)
    except Exception as exc:  # noqa: BLE001 - any unreadable file becomes an error record
        return None, {"path": rel, "error": str(exc)}
    try:
        az, el = plan.angles(view)
    except IndexError:
        az = el = float("nan")
    return ManifestEntry(group, lod, view, az, el, modality, rel, int(w), int(h), checksum), None


def build_manifest(root, plan: OrbitPlan | None = None, previous: Manifest | None = None,
                   workers: int = 8) -> Manifest:
    """Scan ``root`` and checksum every file.

    Params recorded in ``previous`` are carried over for files whose
    checksum is unchanged.
    """
    root = Path(root)
    plan = plan or (previous.plan if previous is not None else DEFAULT_PLAN)
    jobs = []
    warnings = 0
    if root.is_dir():
        for group_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            for dirpath, _, files in os.walk(group_dir):
                for name in sorted(files):
                    rel_in_group = os.path.relpath(os.path.join(dirpath, name), group_dir).replace(os.sep, "/")
                    m = _PATH_RE.match(rel_in_group)
                    if not m or m.group(2) not in MODALITIES:
                        warnings += 1
                        continue
                    lod, modality, view = int(m.group(1)), m.group(2), int(m.group(3))
                    jobs.append((f"{group_dir.name}/{rel_in_group}", group_dir.name, lod, modality, view))
    with ThreadPoolExecutor(max(1, workers)) as pool:
        results = list(pool.map(lambda j: _scan_one(root, j[0], plan, j[1], j[2], j[3], j[4]), jobs))
    entries, errors = [], []
    for entry, err in results:
        if err:
            errors.append(err)
            continue
        if previous is not None:
            old = previous.find(*entry.key)
            if old is not None and old.checksum == entry.checksum:
                entry.params = old.params
        entries.append(entry)
    if warnings:
        log.warning("skipped %d files outside the dataset layout", warnings)
    header = dict(previous.header) if previous is not None else {}
    header["orbit"] = plan.to_dict()
    man = Manifest(entries, header=header, root=str(root), errors=errors, warnings=warnings)
    return man


def simulate_manifest(groups: int, plan: OrbitPlan = DEFAULT_PLAN, size: int = 512,
                      modalities=IMAGE_MODALITIES) -> Manifest:
    """Manifest-only dataset (no files) with every (group, LoD, view, modality) present."""
    entries = []
    for g in range(groups):
        gid = f"g{g:03d}"
        for lod in LODS:
            for v in range(plan.n_views):
                az, el = plan.angles(v)
                for mod in modalities:
                    entries.append(ManifestEntry(gid, lod, v, az, el, mod, entry_path(gid, lod, mod, v),
                                                 size, size, "0" * 16))
    return Manifest(entries, header={"orbit": plan.to_dict(), "simulated": True})


@dataclass
class ValidationReport:
    violations: list[dict] = field(default_factory=list)
    images_per_model: dict = field(default_factory=dict)
    n_groups: int = 0
    n_entries: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n_groups": self.n_groups,
            "n_entries": self.n_entries,
            "images_per_model": {f"{g}/lod{l}": n for (g, l), n in sorted(self.images_per_model.items())},
            "violations": self.violations,
        }


def validate(manifest: Manifest, plan: OrbitPlan | None = None) -> ValidationReport:
    """Check completeness (views x modalities per model, all LoDs per group) and resolution consistency."""
    plan = plan or manifest.plan
    n_views = plan.n_views
    rep = ValidationReport(n_groups=len(manifest.groups), n_entries=len(manifest))
    for err in manifest.errors:
        rep.violations.append({"check": "unreadable", **err})
    seen = {}
    for e in manifest.entries:
        if e.key in seen:
            rep.violations.append({"check": "duplicate", "key": list(e.key)})
        seen[e.key] = e
        if not 0 <= e.view_index < n_views:
            rep.violations.append({"check": "unexpected-view", "group": e.group_id, "lod": e.lod,
                                   "view": e.view_index, "modality": e.modality})
    for g in manifest.groups:
        group_entries = [e for e in manifest.entries if e.group_id == g]
        for lod in LODS:
            imgs = [e for e in group_entries if e.lod == lod and e.modality in IMAGE_MODALITIES]
            rep.images_per_model[(g, lod)] = len(imgs)
            if not imgs:
                rep.violations.append({"check": "missing-lod", "group": g, "lod": lod})
                continue
            for v in range(n_views):
                for mod in IMAGE_MODALITIES:
                    if (g, lod, v, mod) not in seen:
                        rep.violations.append({"check": "missing-entry", "group": g, "lod": lod,
                                               "view": v, "modality": mod})
        sizes = sorted({(e.width, e.height) for e in group_entries if e.modality in IMAGE_MODALITIES})
        if len(sizes) > 1:
            rep.violations.append({"check": "resolution", "group": g, "sizes": [list(s) for s in sizes]})
    return rep


class PairResult(NamedTuple):
    pairs: list
    skipped: int


def pair_iter(manifest: Manifest, lod_a: int, lod_b: int, modality: str,
              modality_b: str | None = None) -> PairResult:
    """Entries of two LoDs matched on (group, view); only complete pairs are returned."""
    if lod_a == lod_b and (modality_b is None or modality_b == modality):
        raise ValueError("pairing needs two different LoDs or modalities")
    modality_b = modality_b or modality
    side_a = {(e.group_id, e.view_index): e for e in manifest.select(lod=lod_a, modality=modality)}
    side_b = {(e.group_id, e.view_index): e for e in manifest.select(lod=lod_b, modality=modality_b)}
    keys = sorted(set(side_a) | set(side_b))
    pairs = [(side_a[k], side_b[k]) for k in keys if k in side_a and k in side_b]
    return PairResult(pairs, len(keys) - len(pairs))


def background_mask(rgb: np.ndarray) -> np.ndarray:
    """Pixels matching the most common border color."""
    img = np.asarray(rgb)
    if img.ndim == 2:
        img = img[..., None]
    border = np.concatenate([img[0], img[-1], img[:, 0], img[:, -1]])
    vals, counts = np.unique(border, axis=0, return_counts=True)
    bg = vals[np.argmax(counts)]
    return np.all(img == bg, axis=-1)


@dataclass
class AlignmentReport:
    group_id: str
    view_index: int
    ious: dict
    threshold: float
    flagged: list

    @property
    def ok(self) -> bool:
        return not self.flagged


def verify_alignment(manifest: Manifest, group_id: str, view_index: int, threshold: float = 0.85,
                     modality: str = "rgb") -> AlignmentReport:
    """Pairwise silhouette bounding-box IoU of the three LoD images of one view."""
    entries = {lod: manifest.find(group_id, lod, view_index, modality) for lod in LODS}
    missing = [f"{group_id}/lod{lod}/{modality}/{view_index:03d}" for lod, e in entries.items() if e is None]
    if missing:
        raise LookupError(f"missing entries: {', '.join(missing)}")
    sil = {lod: ~background_mask(read_png(manifest.abspath(e))) for lod, e in entries.items()}
    ious, flagged = {}, []
    for a, b in ((1, 2), (1, 3), (2, 3)):
        iou = bbox_iou(sil[a], sil[b])
        ious[f"{a}-{b}"] = iou
        if iou < threshold:
            flagged.append(f"{a}-{b}")
    return AlignmentReport(group_id, view_index, ious, threshold, flagged)
