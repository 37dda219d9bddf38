"""Generation loop: pairing, weighted crossover/mutation, gating, pool evolution.

Randomness is deterministic and parallelism-proof: the pair order of
generation g derives from (seed, g), and every per-candidate draw derives
from (seed, g, attempt_index). Evaluating attempts concurrently therefore
cannot change the accepted set; acceptance is applied in attempt order.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import AdapterFailure, EmptyPool, NoFaceFound
from .fusion import FaceAsset, MorphSpec, OpType, face_merge
from .geometry import validate_landmarks
from .scoring import (
    DEFAULT_FORGERY_MIDPOINT,
    DEFAULT_FORGERY_SCALE,
    EmbeddingGallery,
    ScorerBinding,
    Verdict,
    build_gallery,
    check_anonymity,
    score_forgery,
)


class PoolPolicy(enum.Enum):
    ORIGINALS_ONLY = "originals-only"
    PREVIOUS_GENERATION = "previous-generation"
    CUMULATIVE = "cumulative"


class AnonymityMode(enum.Enum):
    GATE = "gate"
    POSTHOC = "posthoc"


class ScorerErrorPolicy(enum.Enum):
    ABORT = "abort"
    REJECT = "reject"


@dataclass(frozen=True)
class GaConfig:
    """Knobs of the generation loop."""

    alpha: MorphSpec
    max_g: int
    max_i: int
    p_crossover: float = 0.95
    p_mutation: float = 0.05
    mutation_step: float = 0.1
    forgery_threshold: float = 0.5
    anonymity_threshold: float = 0.6
    seed: int = 0
    pool_policy: PoolPolicy = PoolPolicy.PREVIOUS_GENERATION
    anonymity_mode: AnonymityMode = AnonymityMode.GATE
    on_scorer_error: ScorerErrorPolicy = ScorerErrorPolicy.ABORT
    jobs: int = 1
    gallery_include_healthy: bool = False

    def __post_init__(self):
        if self.max_g < 1 or self.max_i < 1:
            raise ValueError("max_g and max_i must be >= 1")
        if self.p_crossover + self.p_mutation != 1.0:
            raise ValueError("p_crossover + p_mutation must equal 1 exactly")
        if not 0.0 <= self.p_crossover <= 1.0:
            raise ValueError("p_crossover must lie in [0, 1]")
        if self.mutation_step != 0.1:
            raise ValueError("mutation alphas are drawn on the fixed 0.1 grid")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class GenerationState:
    """Per-generation counters; attempted = accepted + all rejections."""

    generation_index: int
    accepted_count: int = 0
    attempted_count: int = 0
    rejected_forgery: int = 0
    rejected_recognized: int = 0
    rejected_no_face: int = 0


@dataclass(frozen=True)
class ScorerSuite:
    """Bindings for the three scorer roles plus stub forgery calibration."""

    forgery: ScorerBinding = field(default_factory=ScorerBinding.stub)
    matcher: ScorerBinding = field(default_factory=ScorerBinding.stub)
    landmarks: ScorerBinding = field(default_factory=ScorerBinding.stub)
    forgery_midpoint: float = DEFAULT_FORGERY_MIDPOINT
    forgery_scale: float = DEFAULT_FORGERY_SCALE


@dataclass
class GenerationResult:
    accepted: List[FaceAsset]
    stats: GenerationState
    pool_candidates: List[FaceAsset]  # accepted, plus identified ones in posthoc mode


@dataclass
class EvolutionResult:
    config: GaConfig
    assets: List[FaceAsset]
    generations: List[GenerationState]
    drug_originals: List[FaceAsset]
    healthy_originals: List[FaceAsset]
    gallery: EmbeddingGallery
    terminated_early: bool = False

    def stats_rows(self):
        tenths = self.config.alpha.tenths
        alpha_tenths = tenths if tenths is not None else round(self.config.alpha.alpha * 10)
        for st in self.generations:
            yield {
                "generation": st.generation_index,
                "alpha_tenths": alpha_tenths,
                "attempted": st.attempted_count,
                "accepted": st.accepted_count,
                "rejected_forgery": st.rejected_forgery,
                "rejected_recognized": st.rejected_recognized,
                "rejected_no_face": st.rejected_no_face,
            }


def _rng(seed: int, *spawn_key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=spawn_key)))


def choose_operation(rng: np.random.Generator, p_crossover: float = 0.95) -> OpType:
    """Crossover with the configured probability, mutation otherwise."""
    return OpType.CROSSOVER if rng.random() < p_crossover else OpType.MUTATION


def draw_mutation_alpha(rng: np.random.Generator) -> MorphSpec:
    """Uniform draw from the 11-point grid {0.0, 0.1, ..., 1.0}."""
    return MorphSpec.from_tenths(int(rng.integers(0, 11)))


class _Status(enum.Enum):
    NO_FACE = "no_face"
    FAKE = "fake"
    IDENTIFIED = "identified"
    PASS = "pass"


@dataclass
class _Outcome:
    index: int
    status: _Status
    candidate: Optional[FaceAsset] = None


def _evaluate_attempt(index, pair, cfg: GaConfig, g, scorers: ScorerSuite, gallery) -> _Outcome:
    x, y = pair
    if not (validate_landmarks(x.landmarks) and validate_landmarks(y.landmarks)):
        return _Outcome(index, _Status.NO_FACE)
    rng = _rng(cfg.seed, g, index)
    op = choose_operation(rng, cfg.p_crossover)
    spec = cfg.alpha if op is OpType.CROSSOVER else draw_mutation_alpha(rng)
    # the candidate's own alpha goes into the id (as tenths, drift-free)
    tag = f"a{spec.tenths:02d}" if spec.quantized else f"a{spec.alpha:.3f}"
    candidate = face_merge(
        x, y, spec, child_id=f"g{g:02d}{tag}_i{index:05d}", op_type=op
    )
    candidate.attempt_index = index
    candidate.generation = g  # cohort index; >= the lineage-derived value

    try:
        forgery = score_forgery(
            candidate.raster,
            scorers.forgery,
            cfg.forgery_threshold,
            midpoint=scorers.forgery_midpoint,
            scale=scorers.forgery_scale,
        )
    except (AdapterFailure, NoFaceFound):
        if cfg.on_scorer_error is ScorerErrorPolicy.ABORT:
            raise
        return _Outcome(index, _Status.FAKE, candidate)
    candidate.forgery = forgery
    if forgery.verdict is not Verdict.REAL:
        return _Outcome(index, _Status.FAKE, candidate)

    try:
        anonymity = check_anonymity(
            candidate.raster, candidate.landmarks, gallery, cfg.anonymity_threshold
        )
    except (AdapterFailure, NoFaceFound):
        if cfg.on_scorer_error is ScorerErrorPolicy.ABORT:
            raise
        return _Outcome(index, _Status.IDENTIFIED, candidate)
    candidate.anonymity = anonymity
    if not anonymity.is_unknown:
        return _Outcome(index, _Status.IDENTIFIED, candidate)
    return _Outcome(index, _Status.PASS, candidate)


def _shuffled_pairs(drug_pool, healthy_pool, seed, g):
    pairs = [(x, y) for x in drug_pool for y in healthy_pool]
    order = _rng(seed, g).permutation(len(pairs))
    return [pairs[i] for i in order]


def run_generation(
    drug_pool: Sequence[FaceAsset],
    healthy_pool: Sequence[FaceAsset],
    cfg: GaConfig,
    g: int,
    scorers: ScorerSuite,
    gallery: EmbeddingGallery,
) -> GenerationResult:
    """One pass of pairing, merging and gating; stops at max_i accepted."""
    if not drug_pool or not healthy_pool:
        raise EmptyPool(f"generation {g} has an empty parent pool")
    pairs = _shuffled_pairs(drug_pool, healthy_pool, cfg.seed, g)
    stats = GenerationState(generation_index=g)
    accepted: List[FaceAsset] = []
    pool_candidates: List[FaceAsset] = []

    def consume(outcome: _Outcome) -> bool:
        stats.attempted_count += 1
        if outcome.status is _Status.NO_FACE:
            stats.rejected_no_face += 1
        elif outcome.status is _Status.FAKE:
            stats.rejected_forgery += 1
        elif outcome.status is _Status.IDENTIFIED:
            stats.rejected_recognized += 1
            if cfg.anonymity_mode is AnonymityMode.POSTHOC:
                # identified faces stay in the breeding pool but never ship
                pool_candidates.append(outcome.candidate)
        else:
            candidate = outcome.candidate
            accepted.append(candidate)
            pool_candidates.append(candidate)
            stats.accepted_count += 1
        return stats.accepted_count >= cfg.max_i

    if cfg.jobs == 1:
        for index, pair in enumerate(pairs):
            if consume(_evaluate_attempt(index, pair, cfg, g, scorers, gallery)):
                break
    else:
        # evaluate a sliding window concurrently, consume strictly in order;
        # eager evaluation past the cap is wasted work, so keep the window tight
        window = cfg.jobs * 2
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {}
            submitted = 0
            done = False
            for index in range(len(pairs)):
                while submitted < len(pairs) and submitted < index + window:
                    futures[submitted] = pool.submit(
                        _evaluate_attempt, submitted, pairs[submitted], cfg, g, scorers, gallery
                    )
                    submitted += 1
                if consume(futures.pop(index).result()):
                    done = True
                    break
            if done:
                for fut in futures.values():
                    fut.cancel()
    return GenerationResult(accepted, stats, pool_candidates)


def run_evolution(
    cfg: GaConfig,
    drug_originals: Sequence[FaceAsset],
    healthy_originals: Sequence[FaceAsset],
    scorers: Optional[ScorerSuite] = None,
) -> EvolutionResult:
    """Full Algorithm-1 run: gallery build, max_g generations, pool evolution."""
    scorers = scorers or ScorerSuite()
    drug_originals = list(drug_originals)
    healthy_originals = list(healthy_originals)
    if not drug_originals or not healthy_originals:
        raise EmptyPool("both original pools must be non-empty")

    gallery_assets = list(drug_originals)
    if cfg.gallery_include_healthy:
        gallery_assets += healthy_originals
    gallery = build_gallery(gallery_assets, scorers.matcher)

    assets: List[FaceAsset] = []
    generations: List[GenerationState] = []
    all_survivors: List[FaceAsset] = []
    drug_pool = drug_originals
    healthy_pool = healthy_originals
    terminated_early = False

    for g in range(1, cfg.max_g + 1):
        result = run_generation(drug_pool, healthy_pool, cfg, g, scorers, gallery)
        generations.append(result.stats)
        assets.extend(result.accepted)
        all_survivors.extend(result.pool_candidates)

        if g == cfg.max_g:
            break
        if cfg.pool_policy is PoolPolicy.ORIGINALS_ONLY:
            continue
        if cfg.pool_policy is PoolPolicy.PREVIOUS_GENERATION:
            if not result.pool_candidates:
                terminated_early = True
                break
            drug_pool = result.pool_candidates
            healthy_pool = healthy_originals + result.pool_candidates
        else:  # CUMULATIVE
            drug_pool = drug_originals + all_survivors
            healthy_pool = healthy_originals + all_survivors

    return EvolutionResult(
        config=cfg,
        assets=assets,
        generations=generations,
        drug_originals=drug_originals,
        healthy_originals=healthy_originals,
        gallery=gallery,
        terminated_early=terminated_early,
    )
