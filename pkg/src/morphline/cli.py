"""Command-line surface: generate, morph, asymmetry, stats, synth-corpus.

Exit codes: 0 success, 1 usage error, 2 input error, 3 adapter failure.
MORPHLINE_SEED is honored when --seed is not given.
"""

from __future__ import annotations

import argparse
import csv
import glob
import os
import sys
from pathlib import Path

from . import asymmetry as asym
from . import dataset_io, report, synth
from .errors import (
    AdapterFailure,
    DecodeFailure,
    DegenerateRoi,
    DimensionMismatch,
    EmptyPool,
    IoFailure,
    MissingLandmarks,
    MorphlineError,
    NoFaceFound,
)
from .fusion import MorphSpec, face_merge
from .ga import (
    AnonymityMode,
    GaConfig,
    PoolPolicy,
    ScorerErrorPolicy,
    ScorerSuite,
    run_evolution,
)
from .scoring import DEFAULT_FORGERY_MIDPOINT, DEFAULT_FORGERY_SCALE, ScorerBinding

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_ADAPTER = 3

_INPUT_ERRORS = (
    MissingLandmarks,
    DecodeFailure,
    EmptyPool,
    DimensionMismatch,
    DegenerateRoi,
    IoFailure,
    FileNotFoundError,
    NotADirectoryError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    env = os.environ.get("MORPHLINE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            pass
    return 0


def _landmark_source(value: str):
    if value == "sidecar":
        return "sidecar"
    if value == "stub":
        return ScorerBinding.stub()
    if value.startswith("cmd:"):
        return ScorerBinding.external(value[4:])
    raise argparse.ArgumentTypeError("expected sidecar, stub, or cmd:<command>")


def _binding(cmd_value, stub_flag_name) -> ScorerBinding:
    if cmd_value:
        return ScorerBinding.external(cmd_value)
    return ScorerBinding.stub()


def build_parser() -> _Parser:
    parser = _Parser(prog="morphline", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run the GA augmentation loop")
    gen.add_argument("--drug-dir", required=True)
    gen.add_argument("--healthy-dir", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--alpha", type=int, required=True, metavar="TENTHS",
                     choices=range(0, 11), help="fusion coefficient in tenths, 0..10")
    gen.add_argument("--generations", type=int, default=5)
    gen.add_argument("--max-per-gen", type=int, default=300)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--size", type=int, default=dataset_io.DEFAULT_WORKING_SIZE,
                     help="working resolution (images are resized to SIZE x SIZE)")
    group = gen.add_mutually_exclusive_group()
    group.add_argument("--forgery-cmd", default=None)
    group.add_argument("--forgery-stub", action="store_true")
    group = gen.add_mutually_exclusive_group()
    group.add_argument("--matcher-cmd", default=None)
    group.add_argument("--matcher-stub", action="store_true")
    gen.add_argument("--landmarks", type=_landmark_source, default="sidecar",
                     metavar="{sidecar|cmd:<command>|stub}")
    gen.add_argument("--forgery-threshold", type=float, default=0.5)
    gen.add_argument("--anonymity-threshold", type=float, default=0.6)
    gen.add_argument("--anonymity-mode", choices=[m.value for m in AnonymityMode], default="gate")
    gen.add_argument("--pool-policy", choices=[p.value for p in PoolPolicy],
                     default=PoolPolicy.PREVIOUS_GENERATION.value)
    gen.add_argument("--jobs", type=int, default=1)
    gen.add_argument("--p-crossover", type=float, default=0.95)
    gen.add_argument("--forgery-s0", type=float, default=DEFAULT_FORGERY_MIDPOINT,
                     help="stub forgery logistic midpoint (Laplacian variance)")
    gen.add_argument("--forgery-scale", type=float, default=DEFAULT_FORGERY_SCALE)
    gen.add_argument("--gallery-include-healthy", action="store_true")
    gen.add_argument("--on-scorer-error", choices=[p.value for p in ScorerErrorPolicy],
                     default="abort")

    morph = sub.add_parser("morph", help="merge one pair of images")
    morph.add_argument("drug_image")
    morph.add_argument("healthy_image")
    morph.add_argument("--alpha", type=int, required=True, metavar="TENTHS", choices=range(0, 11))
    morph.add_argument("--out", required=True)

    asymp = sub.add_parser("asymmetry", help="asymmetry CSV for a directory of images")
    asymp.add_argument("directory")
    asymp.add_argument("--out", required=True)

    stats = sub.add_parser("stats", help="curves and summaries from manifests")
    stats.add_argument("manifests", nargs="+", help="manifest.json paths or globs")
    stats.add_argument("--out", required=True)
    stats.add_argument("--asymmetry-before", default=None, help="asymmetry CSV, before cohort")
    stats.add_argument("--asymmetry-after", default=None, help="asymmetry CSV, after cohort")

    corpus = sub.add_parser("synth-corpus", help="generate a synthetic test corpus")
    corpus.add_argument("--out", required=True)
    corpus.add_argument("--n", type=int, default=10)
    corpus.add_argument("--seed", type=int, default=None)
    corpus.add_argument("--size", type=int, default=synth.DEFAULT_CORPUS_SIZE)

    return parser


def _cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    landmark_source = args.landmarks
    working = args.size
    drug = dataset_io.load_pool(args.drug_dir, landmark_source,
                                pool=dataset_io.Pool.DRUG_ORIGINAL, working_size=working)
    healthy = dataset_io.load_pool(args.healthy_dir, landmark_source,
                                   pool=dataset_io.Pool.HEALTHY_GAN, working_size=working)
    cfg = GaConfig(
        alpha=MorphSpec.from_tenths(args.alpha),
        max_g=args.generations,
        max_i=args.max_per_gen,
        p_crossover=args.p_crossover,
        p_mutation=1.0 - args.p_crossover,
        forgery_threshold=args.forgery_threshold,
        anonymity_threshold=args.anonymity_threshold,
        seed=seed,
        pool_policy=PoolPolicy(args.pool_policy),
        anonymity_mode=AnonymityMode(args.anonymity_mode),
        on_scorer_error=ScorerErrorPolicy(args.on_scorer_error),
        jobs=args.jobs,
        gallery_include_healthy=args.gallery_include_healthy,
    )
    scorers = ScorerSuite(
        forgery=_binding(args.forgery_cmd, "forgery"),
        matcher=_binding(args.matcher_cmd, "matcher"),
        landmarks=landmark_source if isinstance(landmark_source, ScorerBinding) else ScorerBinding.stub(),
        forgery_midpoint=args.forgery_s0,
        forgery_scale=args.forgery_scale,
    )
    result = run_evolution(cfg, drug, healthy, scorers)
    manifest = dataset_io.write_dataset(result, args.out)
    total = len(result.assets)
    print(f"accepted {total} assets over {len(result.generations)} generation(s); "
          f"manifest at {manifest}")
    return EXIT_OK


def _load_single(path_str: str):
    path = Path(path_str)
    raster = dataset_io.load_image(path)
    side = dataset_io.sidecar_path(path)
    if not side.exists():
        raise MissingLandmarks(f"no sidecar for {path}")
    landmarks = dataset_io.read_sidecar(side)
    h, w = raster.shape[:2]
    if (landmarks.image_width, landmarks.image_height) != (w, h):
        raise DecodeFailure(f"sidecar {side} does not match image dimensions of {path.name}")
    return raster, landmarks


def _cmd_morph(args) -> int:
    from .fusion import FaceAsset, Pool

    drug_raster, drug_marks = _load_single(args.drug_image)
    healthy_raster, healthy_marks = _load_single(args.healthy_image)
    drug = FaceAsset(id=Path(args.drug_image).stem, raster=drug_raster,
                     landmarks=drug_marks, pool=Pool.DRUG_ORIGINAL)
    healthy = FaceAsset(id=Path(args.healthy_image).stem, raster=healthy_raster,
                        landmarks=healthy_marks, pool=Pool.HEALTHY_GAN)
    merged = face_merge(drug, healthy, MorphSpec.from_tenths(args.alpha))
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    dataset_io.save_image(out, merged.raster)
    dataset_io.write_sidecar(dataset_io.sidecar_path(out), out.name, merged.landmarks)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_asymmetry(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    manifest_path = directory / "manifest.json"
    rows = []
    if manifest_path.exists():
        manifest = dataset_io.load_manifest(manifest_path)
        entries = [
            (r["id"], directory / r["file"], r["generation"], r["alpha_tenths"])
            for r in manifest["records"]
        ]
    else:
        files = sorted(
            p for p in directory.iterdir()
            if p.suffix.lower() in dataset_io.IMAGE_EXTENSIONS and p.is_file()
        )
        entries = [(p.stem, p, 0, "") for p in files]
    if not entries:
        raise DecodeFailure(f"no images found in {directory}")
    for asset_id, path, generation, alpha in entries:
        raster, landmarks = _load_single(str(path))
        rep = asym.asymmetry_report(raster, landmarks)
        rows.append([asset_id, generation, alpha,
                     f"{rep.eyes:.4f}", f"{rep.cheeks:.4f}", f"{rep.mouth:.4f}", f"{rep.mean:.4f}"])
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "generation", "alpha", "eyes_pct", "cheeks_pct", "mouth_pct", "mean_pct"])
        writer.writerows(rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def _read_asymmetry_csv(path) -> list:
    reports = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            reports.append(
                asym.AsymmetryReport(
                    eyes=float(row["eyes_pct"]),
                    cheeks=float(row["cheeks_pct"]),
                    mouth=float(row["mouth_pct"]),
                    mean=float(row["mean_pct"]),
                )
            )
    if not reports:
        raise DecodeFailure(f"no asymmetry rows in {path}")
    return reports


def _cmd_stats(args) -> int:
    paths = []
    for pattern in args.manifests:
        hits = sorted(glob.glob(pattern))
        paths.extend(hits if hits else [pattern])
    manifests = [dataset_io.load_manifest(p) for p in paths]
    rejection = report.rejection_curves(manifests)
    recognition = report.recognition_curves(manifests)
    report.write_curves(args.out, rejection, recognition)
    written = ["rejection.csv", "rejection.matrix", "recognition.csv", "recognition.matrix"]
    if args.asymmetry_before and args.asymmetry_after:
        before = _read_asymmetry_csv(args.asymmetry_before)
        after = _read_asymmetry_csv(args.asymmetry_after)
        summary = report.asymmetry_summary(before, after)
        (Path(args.out) / "asymmetry_summary.csv").write_text(report.asymmetry_summary_csv(summary))
        written.append("asymmetry_summary.csv")
    print(f"wrote {', '.join(written)} to {args.out}")
    return EXIT_OK


def _cmd_synth_corpus(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    paths = synth.write_corpus(args.out, args.n, seed, args.size)
    print(f"wrote {len(paths)} faces to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "morph": _cmd_morph,
    "asymmetry": _cmd_asymmetry,
    "stats": _cmd_stats,
    "synth-corpus": _cmd_synth_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (AdapterFailure, NoFaceFound) as exc:
        print(f"morphline: adapter failure: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except _INPUT_ERRORS as exc:
        print(f"morphline: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"morphline: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MorphlineError as exc:
        print(f"morphline: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
