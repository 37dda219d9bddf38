"""Image and landmark IO, dataset layout, manifest with lineage.

Layout of a written dataset:

    out/
      gen_1/<id>.png              one PNG + one .landmarks.json per asset
      gen_1/<id>.landmarks.json
      ...
      manifest.json               config, originals, per-generation stats, records
      stats.csv                   generation, alpha_tenths, attempted, accepted,
                                  rejected_forgery, rejected_recognized, rejected_no_face

Rewriting the same result is byte-identical; PNG is used for losslessness.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeFailure, IoFailure, MissingLandmarks
from .fusion import FaceAsset, Pool, resize_raster
from .geometry import LANDMARK_COUNT, LandmarkSet, validate_landmarks
from .ga import EvolutionResult
from .scoring import ScorerBinding, detect_landmarks

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")
SIDECAR_SUFFIX = ".landmarks.json"
DEFAULT_WORKING_SIZE = 1024

STATS_COLUMNS = (
    "generation",
    "alpha_tenths",
    "attempted",
    "accepted",
    "rejected_forgery",
    "rejected_recognized",
    "rejected_no_face",
)


def sidecar_path(image_path: Union[str, Path]) -> Path:
    p = Path(image_path)
    return p.with_name(p.stem + SIDECAR_SUFFIX)


def write_sidecar(path: Union[str, Path], image_name: str, landmarks: LandmarkSet) -> None:
    payload = {
        "image": image_name,
        "width": int(landmarks.image_width),
        "height": int(landmarks.image_height),
        "points": [[float(x), float(y)] for x, y in landmarks.points],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_sidecar(path: Union[str, Path]) -> LandmarkSet:
    try:
        payload = json.loads(Path(path).read_text())
        pts = np.asarray(payload["points"], dtype=np.float64)
        width = int(payload["width"])
        height = int(payload["height"])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise DecodeFailure(f"bad landmark sidecar {path}: {exc}") from exc
    if pts.shape != (LANDMARK_COUNT, 2):
        raise DecodeFailure(f"sidecar {path} must carry exactly {LANDMARK_COUNT} [x, y] pairs")
    return LandmarkSet(pts, width, height)


def load_image(path: Union[str, Path]) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeFailure(f"cannot decode image {path}: {exc}") from exc


def save_image(path: Union[str, Path], raster: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(raster)).save(path, format="PNG")


def load_pool(
    directory: Union[str, Path],
    landmark_source: Union[str, ScorerBinding] = "sidecar",
    pool: Pool = Pool.DRUG_ORIGINAL,
    working_size: Optional[int] = DEFAULT_WORKING_SIZE,
) -> List[FaceAsset]:
    """Load every image in a directory as a generation-0 asset.

    Landmarks come from `<name>.landmarks.json` sidecars when
    landmark_source is "sidecar", otherwise from the given detector binding.
    Assets are sorted by filename; rasters are resized bilinearly to
    working_size x working_size (landmarks rescaled) unless working_size is
    None.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    files = sorted(
        p for p in directory.iterdir()
        if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file()
    )
    assets = []
    for path in files:
        raster = load_image(path)
        h, w = raster.shape[:2]
        side = sidecar_path(path)
        if isinstance(landmark_source, ScorerBinding):
            landmarks = detect_landmarks(raster, landmark_source, image_path=str(path))
        elif side.exists():
            landmarks = read_sidecar(side)
            if (landmarks.image_width, landmarks.image_height) != (w, h):
                raise DecodeFailure(
                    f"sidecar {side} is for a {landmarks.image_width}x{landmarks.image_height} "
                    f"image but {path.name} is {w}x{h}"
                )
        else:
            raise MissingLandmarks(f"no sidecar for {path} and no detector configured")
        if working_size is not None and (w, h) != (working_size, working_size):
            raster = resize_raster(raster, working_size, working_size)
            landmarks = landmarks.scaled(working_size, working_size)
        if not validate_landmarks(landmarks):
            raise DecodeFailure(f"landmarks for {path} are invalid")
        assets.append(
            FaceAsset(
                id=path.stem,
                raster=raster,
                landmarks=landmarks,
                pool=pool,
                source_path=str(path),
            )
        )
    return assets


def _record_for(asset: FaceAsset, rel_file: str) -> dict:
    record = {
        "id": asset.id,
        "file": rel_file,
        "generation": asset.generation,
        "alpha_tenths": asset.parents.alpha_tenths if asset.parents else None,
        "op_type": asset.parents.op_type.value if asset.parents else "original",
        "parents": [asset.parents.drug_id, asset.parents.healthy_id] if asset.parents else None,
        "attempt_index": asset.attempt_index,
        "forgery_real_confidence": asset.forgery.real_confidence if asset.forgery else None,
        "anonymity_min_distance": asset.anonymity.min_distance if asset.anonymity else None,
        "anonymity_is_unknown": asset.anonymity.is_unknown if asset.anonymity else None,
        "asymmetry": None,
    }
    return record


def _config_dict(result: EvolutionResult) -> dict:
    cfg = result.config
    return {
        "alpha": cfg.alpha.alpha,
        "alpha_tenths": cfg.alpha.tenths,
        "max_g": cfg.max_g,
        "max_i": cfg.max_i,
        "p_crossover": cfg.p_crossover,
        "p_mutation": cfg.p_mutation,
        "mutation_step": cfg.mutation_step,
        "forgery_threshold": cfg.forgery_threshold,
        "anonymity_threshold": cfg.anonymity_threshold,
        "seed": cfg.seed,
        "pool_policy": cfg.pool_policy.value,
        "anonymity_mode": cfg.anonymity_mode.value,
        "gallery_include_healthy": cfg.gallery_include_healthy,
        "terminated_early": result.terminated_early,
    }


def write_dataset(result: EvolutionResult, out_dir: Union[str, Path]) -> Path:
    """Write all accepted assets, the manifest and the stats table."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        records = []
        for asset in result.assets:
            gen_dir = out / f"gen_{asset.generation}"
            gen_dir.mkdir(exist_ok=True)
            rel = f"gen_{asset.generation}/{asset.id}.png"
            save_image(out / rel, asset.raster)
            write_sidecar(
                out / f"gen_{asset.generation}/{asset.id}{SIDECAR_SUFFIX}",
                f"{asset.id}.png",
                asset.landmarks,
            )
            records.append(_record_for(asset, rel))

        manifest = {
            "schema_version": 1,
            "config": _config_dict(result),
            "originals": [
                {"id": a.id, "pool": a.pool.value, "source": a.source_path, "op_type": "original"}
                for a in result.drug_originals + result.healthy_originals
            ],
            "generations": list(result.stats_rows()),
            "records": records,
        }
        manifest_path = out / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=STATS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in result.stats_rows():
            writer.writerow(row)
        (out / "stats.csv").write_text(buf.getvalue())
    except OSError as exc:
        raise IoFailure(f"cannot write dataset to {out}: {exc}") from exc
    return manifest_path


def load_manifest(path: Union[str, Path]) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DecodeFailure(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(payload, dict) or "records" not in payload:
        raise DecodeFailure(f"{path} is not a dataset manifest")
    return payload
