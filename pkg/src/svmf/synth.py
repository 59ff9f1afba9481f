"""Seeded synthetic detection sets and perturbed benchmark bundles.

Stand-in for rendered-and-augmented image benchmarks: instead of degrading
pixels, detector output is degraded directly by dropping instances,
swapping class labels and jittering box corners.

All randomness comes from ``numpy.random.PCG64`` seeded through
``numpy.random.SeedSequence``, whose output is platform independent.
Per-base and per-variant streams are derived by ``SeedSequence`` spawning
keys (see :func:`mix_seed`).  Variant seeds do not include the level, so
every level of a benchmark replays the same uniform draws and a stronger
level perturbs a superset of what a weaker one does.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import Catalog, Kind
from .detection import BoundingBox, DetectionInstance, DetectionSet, dump_detections, parse_detections
from .fingerprint import SVMF, Hyperparams, compute_svmf, dumps_json, loads_json
from .graph import build_graph
from .retrieval import FingerprintIndex, atomic_write_bytes

__all__ = [
    "SynthError",
    "SynthSpec",
    "PerturbationParams",
    "IDENTITY",
    "REFERENCE_LEVELS",
    "Benchmark",
    "mix_seed",
    "default_spec",
    "generate_base",
    "perturb",
    "build_benchmark",
    "write_bundle",
    "load_bundle",
    "evaluate_benchmark",
]

GENERATOR_ID = "numpy.random.PCG64 via numpy.random.SeedSequence"
SEED_RULE = (
    "base b: SeedSequence([seed, 0, b]); variant v of base b: "
    "SeedSequence([seed, 1, b, v]).generate_state(1, uint64)[0] used as perturbation seed"
)


class SynthError(ValueError):
    """The requested synthetic layout cannot be generated."""


def _rng(entropy) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def mix_seed(*parts: int) -> int:
    """Derive a 64-bit seed from integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class PerturbationParams:
    drop_prob: float = 0.0
    substitute_prob: float = 0.0
    jitter_frac: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("drop_prob", "substitute_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (math.isfinite(self.jitter_frac) and self.jitter_frac >= 0):
            raise ValueError(f"jitter_frac must be finite and nonnegative, got {self.jitter_frac}")

    def dominates(self, other: "PerturbationParams") -> bool:
        return (
            self.drop_prob >= other.drop_prob
            and self.substitute_prob >= other.substitute_prob
            and self.jitter_frac >= other.jitter_frac
        )


IDENTITY = PerturbationParams()
REFERENCE_LEVELS = (
    PerturbationParams(0.02, 0.02, 0.05),
    PerturbationParams(0.05, 0.05, 0.10),
    PerturbationParams(0.10, 0.10, 0.20),
)


@dataclass(frozen=True)
class SynthSpec:
    count_range: tuple[int, int] = (6, 14)
    class_pool: tuple[int, ...] = (0, 1, 2, 3)
    canvas: tuple[float, float] = (512.0, 512.0)
    mean_box_size: float = 40.0
    overlap_density: float = 0.85

    def __post_init__(self):
        object.__setattr__(self, "count_range", tuple(int(c) for c in self.count_range))
        object.__setattr__(self, "class_pool", tuple(int(c) for c in self.class_pool))
        object.__setattr__(self, "canvas", tuple(float(c) for c in self.canvas))
        lo, hi = self.count_range
        if lo < 1 or hi < lo:
            raise SynthError(f"count_range must satisfy 1 <= min <= max, got {self.count_range}")
        if not self.class_pool:
            raise SynthError("class_pool is empty")
        if min(self.canvas) <= 0 or self.mean_box_size <= 0:
            raise SynthError("canvas and mean_box_size must be positive")
        if not 0.0 <= self.overlap_density <= 1.0:
            raise SynthError("overlap_density must lie in [0, 1]")
        if _MAX_SIDE * self.mean_box_size > min(self.canvas):
            raise SynthError(
                f"boxes up to {_MAX_SIDE * self.mean_box_size:g}px cannot fit a {self.canvas} canvas"
            )


_MIN_SIDE, _MAX_SIDE = 0.7, 1.3
_PLACEMENT_ATTEMPTS = 200


def default_spec(catalog: Catalog, n_functional: int = 12, n_carbon: int = 4, **kwargs) -> SynthSpec:
    """A spec drawing from the first few classes of each kind in ``catalog``."""
    fg = catalog.ids_of_kind(Kind.FUNCTIONAL_GROUP)[:n_functional]
    cb = catalog.ids_of_kind(Kind.CARBON_BACKBONE)[:n_carbon]
    return SynthSpec(class_pool=tuple(fg + cb), **kwargs)


def generate_base(spec: SynthSpec, seed: int | Sequence[int], image_key: str = "base") -> DetectionSet:
    """Random detection set; linked placement with probability ``overlap_density``.

    A linked instance is placed so that its box overlaps a randomly chosen
    earlier box, so ``overlap_density == 1`` always yields a connected
    substructure-graph.
    """
    rng = _rng(seed)
    lo, hi = spec.count_range
    count = int(rng.integers(lo, hi + 1))
    width, height = spec.canvas
    boxes: list[tuple[float, float, float, float]] = []
    instances = []
    for idx in range(count):
        w = spec.mean_box_size * rng.uniform(_MIN_SIDE, _MAX_SIDE)
        h = spec.mean_box_size * rng.uniform(_MIN_SIDE, _MAX_SIDE)
        class_id = int(spec.class_pool[rng.integers(len(spec.class_pool))])
        linked = bool(boxes) and rng.random() < spec.overlap_density
        for _ in range(_PLACEMENT_ATTEMPTS):
            if linked:
                ax0, ay0, ax1, ay1 = boxes[int(rng.integers(len(boxes)))]
                reach_x = 0.9 * ((ax1 - ax0) + w) / 2
                reach_y = 0.9 * ((ay1 - ay0) + h) / 2
                cx = (ax0 + ax1) / 2 + rng.uniform(-reach_x, reach_x)
                cy = (ay0 + ay1) / 2 + rng.uniform(-reach_y, reach_y)
            else:
                cx = rng.uniform(w / 2, width - w / 2)
                cy = rng.uniform(h / 2, height - h / 2)
            x0, y0, x1, y1 = cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2
            if x0 >= 0 and y0 >= 0 and x1 <= width and y1 <= height:
                break
        else:
            raise SynthError(f"could not place instance {idx} inside the canvas")
        boxes.append((x0, y0, x1, y1))
        instances.append(DetectionInstance(idx, class_id, BoundingBox(x0, y0, x1, y1), 1.0))
    return DetectionSet(image_key, tuple(instances))


def perturb(
    dset: DetectionSet,
    p: PerturbationParams,
    class_pool: Sequence[int] | None = None,
    image_key: str | None = None,
) -> DetectionSet:
    """Drop, relabel and jitter instances independently.

    Every instance consumes the same number of draws whatever the
    parameters, so streams stay aligned across perturbation strengths.
    Relabelling picks uniformly among the other classes of ``class_pool``
    (default: the classes present in ``dset``).  If every instance would
    be dropped, the last one is kept.
    """
    rng = _rng(p.seed)
    pool = sorted(set(class_pool) if class_pool is not None else {i.class_id for i in dset.instances})
    kept = []
    for inst in dset.instances:
        u_drop, u_sub, u_pick = rng.random(3)
        shifts = rng.uniform(-1.0, 1.0, 4)
        class_id = inst.class_id
        if u_sub < p.substitute_prob:
            others = [c for c in pool if c != class_id]
            if others:
                class_id = others[int(u_pick * len(others))]
        box = inst.box
        if p.jitter_frac > 0:
            step = p.jitter_frac * box.diagonal
            x0, y0, x1, y1 = (c + s * step for c, s in zip(box.as_list(), shifts))
            box = BoundingBox(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
        kept.append((u_drop < p.drop_prob, replace(inst, class_id=class_id, box=box)))
    survivors = tuple(inst for dropped, inst in kept if not dropped)
    if not survivors and kept:
        survivors = (kept[-1][1],)
    return DetectionSet(dset.image_key if image_key is None else image_key, survivors)


@dataclass
class Benchmark:
    manifest: dict
    queries: list[tuple[str, SVMF]]
    targets: dict[str, str]
    levels: list[list[DetectionSet]] = field(default_factory=list)


def _base_key(b: int) -> str:
    return f"base{b:04d}"


def _variant_key(b: int, v: int) -> str:
    return f"{_base_key(b)}-v{v:04d}"


def build_benchmark(
    base_count: int,
    variants_per_base: int,
    levels: Sequence[PerturbationParams],
    seed: int,
    catalog: Catalog,
    spec: SynthSpec | None = None,
    hp: Hyperparams = Hyperparams(),
) -> Benchmark:
    """Queries are base ground-truth fingerprints; each level holds perturbed variants.

    The target of base ``b``'s query is its first variant; the remaining
    variants of every base act as near-duplicate distractors.
    """
    if base_count < 1 or variants_per_base < 1:
        raise SynthError("base_count and variants_per_base must be at least 1")
    if not levels:
        raise SynthError("at least one perturbation level is required")
    spec = spec or default_spec(catalog)
    unknown = [cid for cid in spec.class_pool if cid not in catalog]
    if unknown:
        raise SynthError(f"class_pool ids {unknown} are not in the catalog")

    bases = [generate_base(spec, [seed, 0, b], _base_key(b)) for b in range(base_count)]
    queries = [(s.image_key, compute_svmf(build_graph(s, hp.expansion_factor), catalog, hp)) for s in bases]
    targets = {_base_key(b): _variant_key(b, 0) for b in range(base_count)}
    level_sets = []
    for level in levels:
        sets = []
        for b, base in enumerate(bases):
            for v in range(variants_per_base):
                p = replace(level, seed=mix_seed(seed, 1, b, v))
                sets.append(perturb(base, p, spec.class_pool, _variant_key(b, v)))
        level_sets.append(sets)

    manifest = {
        "format": "svmf-bundle/1",
        "generator": GENERATOR_ID,
        "seed": seed,
        "seed_rule": SEED_RULE,
        "base_count": base_count,
        "variants_per_base": variants_per_base,
        "catalog_n": catalog.n,
        "spec": asdict(spec),
        "hyperparams": asdict(hp),
        "levels": [
            {"name": f"level{i}", "index": f"index/level{i}.jsonl", **asdict(level)}
            for i, level in enumerate(levels, start=1)
        ],
        "queries": [
            {"query": f"queries/{key}.svmf.json", "key": key, "target_key": targets[key]} for key, _ in queries
        ],
    }
    return Benchmark(manifest, queries, targets, level_sets)


def write_bundle(bench: Benchmark, out_dir: str | os.PathLike) -> Path:
    out = Path(out_dir)
    (out / "queries").mkdir(parents=True, exist_ok=True)
    (out / "index").mkdir(parents=True, exist_ok=True)
    for key, fp in bench.queries:
        atomic_write_bytes(out / "queries" / f"{key}.svmf.json", (dumps_json(fp) + "\n").encode())
    for level, sets in zip(bench.manifest["levels"], bench.levels):
        atomic_write_bytes(out / level["index"], dump_detections(sets).encode())
    atomic_write_bytes(out / "manifest.json", (json.dumps(bench.manifest, indent=2) + "\n").encode())
    return out


def load_bundle(path: str | os.PathLike, catalog: Catalog | None = None) -> Benchmark:
    root = Path(path)
    manifest = json.loads((root / "manifest.json").read_text("utf-8"))
    queries = []
    targets = {}
    for q in manifest["queries"]:
        queries.append((q["key"], loads_json((root / q["query"]).read_text("utf-8"), q["key"])))
        targets[q["key"]] = q["target_key"]
    levels = []
    for level in manifest["levels"]:
        with open(root / level["index"], "rb") as fh:
            levels.append(parse_detections(fh, catalog))
    return Benchmark(manifest, queries, targets, levels)


def evaluate_benchmark(bench: Benchmark, catalog: Catalog, hp: Hyperparams | None = None) -> list[dict]:
    """Average target rank per level, fingerprinting index sets with ``hp``.

    ``hp`` defaults to the hyperparameters recorded in the manifest, which
    are the ones the query fingerprints were built with.
    """
    if hp is None:
        hp = hyperparams_from_manifest(bench.manifest)
    report = []
    for level, sets in zip(bench.manifest["levels"], bench.levels):
        idx = FingerprintIndex(catalog.n)
        for s in sets:
            idx.add(s.image_key, compute_svmf(build_graph(s, hp.expansion_factor), catalog, hp))
        ranks = [idx.rank_of(fp, bench.targets[key]) for key, fp in bench.queries]
        report.append(
            {
                "level": level["name"],
                "index_size": len(idx),
                "queries": len(ranks),
                "average_rank": sum(ranks) / len(ranks),
                "ranks": ranks,
            }
        )
    return report


def hyperparams_from_manifest(manifest: dict) -> Hyperparams:
    raw = dict(manifest["hyperparams"])
    raw["h2_table"] = tuple(raw["h2_table"])
    return Hyperparams(**raw)
