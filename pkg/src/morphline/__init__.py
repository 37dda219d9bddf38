"""morphline: GA-driven face-fusion dataset augmentation with gating and asymmetry analysis."""

from .asymmetry import AsymmetryReport, Region, RoiRect, SsimParams, asymmetry_report, extract_rois, ssim
from .errors import (
    AdapterFailure,
    DecodeFailure,
    DegenerateConfiguration,
    DegenerateRoi,
    DimensionMismatch,
    EmptyPool,
    InvalidThreshold,
    IoFailure,
    MissingLandmarks,
    MorphlineError,
    NoFaceFound,
    TopologyMismatch,
)
from .fusion import FaceAsset, Lineage, MorphSpec, OpType, Pool, face_merge
from .ga import (
    AnonymityMode,
    EvolutionResult,
    GaConfig,
    GenerationState,
    PoolPolicy,
    ScorerErrorPolicy,
    ScorerSuite,
    choose_operation,
    draw_mutation_alpha,
    run_evolution,
    run_generation,
)
from .geometry import (
    LandmarkSet,
    SimilarityTransform,
    TriangleMesh,
    boundary_anchors,
    delaunay,
    estimate_similarity,
    triangulate,
    validate_landmarks,
    warp_piecewise_affine,
)
from .scoring import (
    AnonymityReport,
    EmbeddingGallery,
    ForgeryScore,
    ScorerBinding,
    ScorerKind,
    Verdict,
    build_gallery,
    check_anonymity,
    detect_landmarks,
    score_forgery,
)

__version__ = "0.1.0"
