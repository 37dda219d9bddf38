"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Everything runs on the deterministic synthetic corpus; run with -s (or read
the captured output) to see the per-criterion lines.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from morphline.asymmetry import SsimParams, asymmetry_report, ssim
from morphline.cli import main as cli_main
from morphline.dataset_io import load_image, load_manifest, load_pool, read_sidecar
from morphline.fusion import FaceAsset, MorphSpec, OpType, Pool, face_merge
from morphline.ga import GaConfig, ScorerSuite, choose_operation, draw_mutation_alpha, run_generation
from morphline.report import asymmetry_summary, recognition_curves, rejection_curves
from morphline.scoring import ScorerBinding, Verdict, build_gallery, check_anonymity, score_forgery
from morphline.synth import make_assets, make_symmetric_face

from conftest import CORPUS_SIZE, STUB_ANONYMITY_THRESHOLD


def criterion(name, failures):
    from conftest import record_acceptance

    status = "PASS" if not failures else "FAIL"
    detail = f"  ({'; '.join(failures)})" if failures else ""
    line = f"[ACCEPTANCE] {status}: {name}{detail}"
    print(line)
    record_acceptance(line)  # re-emitted after capture, in the terminal summary
    assert not failures, f"{name}: {failures}"


def run_cli(*args):
    return cli_main([str(a) for a in args])


def eq1_reference(x, y, p=SsimParams()):
    """Direct evaluation of the similarity formula with explicit loops."""
    n = x.size
    xs = [float(v) for v in x.ravel()]
    ys = [float(v) for v in y.ravel()]
    mu_x = sum(xs) / n
    mu_y = sum(ys) / n
    var_x = sum((v - mu_x) ** 2 for v in xs) / n
    var_y = sum((v - mu_y) ** 2 for v in ys) / n
    cov = sum((a - mu_x) * (b - mu_y) for a, b in zip(xs, ys)) / n
    return ((2 * mu_x * mu_y + p.c1) * (2 * cov + p.c2)) / (
        (mu_x ** 2 + mu_y ** 2 + p.c1) * (var_x + var_y + p.c2)
    )


def test_morph_endpoints():
    failures = []
    start = time.monotonic()
    drug = make_assets(11, 20, 96, Pool.DRUG_ORIGINAL, "d")
    healthy = make_assets(12, 20, 96, Pool.HEALTHY_GAN, "h")
    for d, h in zip(drug, healthy):
        at1 = face_merge(d, h, MorphSpec.from_tenths(10))
        at0 = face_merge(d, h, MorphSpec.from_tenths(0))
        if not np.array_equal(at1.raster, d.raster):
            failures.append(f"alpha=1 not bit-identical for {d.id}")
        if not np.array_equal(at0.raster, h.raster):
            failures.append(f"alpha=0 not bit-identical for {h.id}")
    elapsed = time.monotonic() - start
    if elapsed >= 10.0:
        failures.append(f"took {elapsed:.1f}s, budget 10s")
    criterion("morph endpoints bit-identical on 20 pairs", failures)


def test_ssim_oracle():
    failures = []
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        x = rng.integers(0, 256, size=(8, 8)).astype(np.float64)
        y = rng.integers(0, 256, size=(8, 8)).astype(np.float64)
        delta = abs(ssim(x, y) - eq1_reference(x, y))
        worst = max(worst, delta)
        if delta > 1e-9:
            failures.append(f"pipeline vs oracle delta {delta:.2e}")
            break
        if abs(ssim(x, x) - 1.0) > 1e-9:
            failures.append("ssim(x, x) != 1")
            break
        if abs(ssim(x, y) - ssim(y, x)) > 1e-9:
            failures.append("ssim not symmetric")
            break
    criterion(f"ssim matches direct-formula oracle (worst delta {worst:.1e})", failures)


def test_ssim_constant_contrast():
    failures = []
    p = SsimParams()
    value = ssim(np.zeros((8, 8)), np.full((8, 8), 255.0), p)
    expected = p.c1 / (255.0 ** 2 + p.c1)
    if abs(value - expected) > 1e-9:
        failures.append(f"got {value!r}, expected {expected!r}")
    if abs(expected - 6.5025 / 65031.5025) > 1e-12:
        failures.append("constants drifted from k1=0.01, L=255")
    criterion("ssim constant-contrast case equals C1/(255^2+C1)", failures)


def test_ga_operation_mix():
    failures = []
    rng = np.random.Generator(np.random.PCG64(2024))
    crossovers = sum(
        1 for _ in range(10_000) if choose_operation(rng) is OpType.CROSSOVER
    )
    if not 9400 <= crossovers <= 9600:
        failures.append(f"crossover count {crossovers} outside [9400, 9600]")
    rng = np.random.Generator(np.random.PCG64(2025))
    for _ in range(1000):
        spec = draw_mutation_alpha(rng)
        if not spec.quantized or spec.tenths not in range(11):
            failures.append(f"off-grid mutation alpha {spec.alpha}")
            break
    criterion(f"operation mix 0.95/0.05 ({crossovers}/10000) and 0.1-grid mutations", failures)


def test_cap_and_gate_soundness(tmp_path, drug_dir, healthy_dir):
    failures = []
    out = tmp_path / "gate_ds"
    code = run_cli(
        "generate", "--drug-dir", drug_dir, "--healthy-dir", healthy_dir,
        "--out", out, "--alpha", 5, "--generations", 1, "--max-per-gen", 20,
        "--seed", 13, "--size", CORPUS_SIZE, "--forgery-threshold", 0.4,
        "--anonymity-threshold", STUB_ANONYMITY_THRESHOLD,
    )
    if code != 0:
        criterion("cap and gate soundness", [f"generate exited {code}"])
        return
    manifest = load_manifest(out / "manifest.json")
    if len(manifest["records"]) != 20:
        failures.append(f"accepted {len(manifest['records'])}, expected exactly 20")

    # re-score every record from the written bytes
    drug = load_pool(drug_dir, pool=Pool.DRUG_ORIGINAL, working_size=CORPUS_SIZE)
    gallery = build_gallery(drug, ScorerBinding.stub())
    cfg = manifest["config"]
    for record in manifest["records"]:
        raster = load_image(out / record["file"])
        landmarks = read_sidecar(out / record["file"].replace(".png", ".landmarks.json"))
        forgery = score_forgery(raster, ScorerBinding.stub(), cfg["forgery_threshold"])
        anonymity = check_anonymity(raster, landmarks, gallery, cfg["anonymity_threshold"])
        if forgery.verdict is not Verdict.REAL:
            failures.append(f"{record['id']} re-scores as fake")
        if not anonymity.is_unknown:
            failures.append(f"{record['id']} re-identifies as {anonymity.matched_id}")
        if abs(forgery.real_confidence - record["forgery_real_confidence"]) > 1e-12:
            failures.append(f"{record['id']} confidence drifted on re-score")

    # injected parent duplicate must always be rejected by the anonymity gate
    probe = drug[0]
    report = check_anonymity(probe.raster, probe.landmarks, gallery, cfg["anonymity_threshold"])
    if report.is_unknown:
        failures.append("parent duplicate passed the anonymity gate")
    healthy = load_pool(healthy_dir, pool=Pool.HEALTHY_GAN, working_size=CORPUS_SIZE)
    dup_cfg = GaConfig(
        alpha=MorphSpec.from_tenths(10), max_g=1, max_i=5, seed=13,
        p_crossover=1.0, p_mutation=0.0, forgery_threshold=0.0,
        anonymity_threshold=STUB_ANONYMITY_THRESHOLD,
    )
    dup = run_generation(drug, healthy, dup_cfg, 1, ScorerSuite(), gallery)
    if dup.stats.accepted_count != 0 or dup.stats.rejected_recognized != dup.stats.attempted_count:
        failures.append("alpha=1 duplicates were not all rejected as recognized")
    criterion("cap exact at max_i=20, manifest re-scores clean, duplicates rejected", failures)


def test_full_run_determinism(tmp_path, drug_dir, healthy_dir):
    failures = []

    def generate(out, jobs):
        return run_cli(
            "generate", "--drug-dir", drug_dir, "--healthy-dir", healthy_dir,
            "--out", out, "--alpha", 5, "--generations", 2, "--max-per-gen", 6,
            "--seed", 21, "--size", 96, "--forgery-threshold", 0.4,
            "--anonymity-threshold", STUB_ANONYMITY_THRESHOLD, "--jobs", jobs,
        )

    trees = {}
    for name, jobs in (("a", 1), ("b", 1), ("c", 8)):
        out = tmp_path / name
        code = generate(out, jobs)
        if code != 0:
            criterion("full-run determinism", [f"run {name} exited {code}"])
            return
        trees[name] = {
            str(p.relative_to(out)): p.read_bytes()
            for p in sorted(out.rglob("*")) if p.is_file()
        }
    if not trees["a"]:
        failures.append("first run wrote nothing")
    if trees["a"] != trees["b"]:
        failures.append("same-seed reruns differ")
    if trees["a"] != trees["c"]:
        failures.append("--jobs 1 vs --jobs 8 trees differ")
    criterion("byte-identical trees across reruns and --jobs 1 vs 8", failures)


def test_rejection_curve_shape(tmp_path, drug_dir, healthy_dir):
    failures = []
    start = time.monotonic()
    manifests = []
    for tenths in range(11):
        out = tmp_path / f"rej_{tenths}"
        code = run_cli(
            "generate", "--drug-dir", drug_dir, "--healthy-dir", healthy_dir,
            "--out", out, "--alpha", tenths, "--generations", 3, "--max-per-gen", 30,
            "--seed", 42, "--size", CORPUS_SIZE,
            "--anonymity-threshold", STUB_ANONYMITY_THRESHOLD,
            "--anonymity-mode", "posthoc",
        )
        if code != 0:
            criterion("rejection-curve shape", [f"alpha={tenths} run exited {code}"])
            return
        manifests.append(load_manifest(out / "manifest.json"))

    for manifest in manifests:
        rows = manifest["generations"]
        tenths = rows[0]["alpha_tenths"]
        if len(rows) != 3:
            failures.append(f"alpha={tenths} ran {len(rows)} generations")
            continue
        counts = [r["rejected_forgery"] for r in rows]
        if not all(counts[i] <= counts[i + 1] for i in range(2)):
            failures.append(f"alpha={tenths} rejection counts not non-decreasing: {counts}")

    table = rejection_curves(manifests)
    if any(not (0.0 <= v <= 1.0) for v in table.cells.values()):
        failures.append("fractions outside [0, 1]")
    elapsed = time.monotonic() - start
    if elapsed >= 300.0:
        failures.append(f"took {elapsed:.0f}s, budget 300s")
    criterion(f"rejection counts non-decreasing per alpha over 3 generations ({elapsed:.0f}s)", failures)


def test_recognition_trend(tmp_path, drug_dir, healthy_dir):
    failures = []
    manifests = []
    for tenths in range(11):
        out = tmp_path / f"rec_{tenths}"
        code = run_cli(
            "generate", "--drug-dir", drug_dir, "--healthy-dir", healthy_dir,
            "--out", out, "--alpha", tenths, "--generations", 1, "--max-per-gen", 30,
            "--seed", 42, "--size", CORPUS_SIZE, "--p-crossover", 1.0,
            "--forgery-threshold", 0.0,
            "--anonymity-threshold", STUB_ANONYMITY_THRESHOLD,
        )
        if code != 0:
            criterion("recognition trend", [f"alpha={tenths} run exited {code}"])
            return
        manifests.append(load_manifest(out / "manifest.json"))

    table = recognition_curves(manifests)
    fractions = [table.fraction(1, t) for t in range(11)]
    if any(fractions[i] > fractions[i + 1] + 1e-12 for i in range(10)):
        failures.append(f"identified fraction not weakly increasing: {fractions}")
    if fractions[10] != 1.0:
        failures.append(f"alpha=1 identified fraction {fractions[10]} != 1.0")
    criterion(
        "identified fraction weakly increasing in alpha, 1.0 at alpha=1 "
        f"({', '.join(f'{f:.2f}' for f in fractions)})",
        failures,
    )


def test_asymmetry_criteria():
    failures = []
    raster, landmarks = make_symmetric_face(CORPUS_SIZE)
    report = asymmetry_report(raster, landmarks)
    if report.mean < 99.0:
        failures.append(f"symmetric face mean {report.mean:.2f} < 99.0")

    perturbed = raster.astype(np.int16).copy()
    pts = landmarks.points
    x0, x1 = int(pts[54, 0]) + 2, int(pts[12, 0]) - 2
    y0, y1 = int(pts[30, 1]) + 2, int(pts[54, 1]) - 2
    perturbed[y0:y1, x0:x1] = np.clip(perturbed[y0:y1, x0:x1] + 60, 0, 255)
    worse = asymmetry_report(perturbed.astype(np.uint8), landmarks)
    if not worse.cheeks < report.cheeks:
        failures.append(
            f"right-cheek perturbation did not lower cheek score "
            f"({worse.cheeks:.2f} vs {report.cheeks:.2f})"
        )

    from morphline.asymmetry import AsymmetryReport

    before = [AsymmetryReport(66.5, 83.3, 77.9, (66.5 + 83.3 + 77.9) / 3)]
    after = [AsymmetryReport(46.4, 69.9, 69.2, (46.4 + 69.9 + 69.2) / 3)]
    summary = asymmetry_summary(before, after)
    expected_delta = {"eyes": -20.1, "cheeks": -13.4, "mouth": -8.7}
    for key, want in expected_delta.items():
        if abs(summary.delta[key] - want) > 1e-9:
            failures.append(f"{key} delta {summary.delta[key]} != {want}")
    criterion("asymmetry: symmetric >= 99, perturbation detected, summary arithmetic", failures)
