"""
Synthetic models and images for the experiments:
    gen_blob_model          two label model with short supermodular and long range edges
    gen_composite_figure    articulated figure of rectangular parts, one grey level per part
    gen_collage             non-overlapping instances of two figure classes with identical appearance
    gen_potts_baseline      (anisotropic) Potts model or free tables on the 4/8-neighbourhood
    gen_cells               noisy discs plus thin bars of the same grey level
"""
import logging

import numpy as np

from grf_shape.core.grid import GrfModel, GridDomain, LabelSet, NeighborhoodStructure, PotentialTable, build_model, normalize_potentials
from grf_shape.errors import PlacementFailure, DimensionMismatch
from grf_shape.learning.composition import LabelMapping

log = logging.getLogger(__name__)

SHORT_OFFSETS = ((1, 0), (0, 1), (1, 1), (-1, 1))
BLOB_SCALE = 5

# Figure layouts: (width, height) of the base box and part rectangles (x0, y0, x1, y1),
# drawn in order, part i gets label i + 1
FIGURES = {
    "man": ((20, 32), [
        (6, 8, 14, 19),     # torso
        (7, 1, 13, 7),      # head
        (6, 19, 9, 31),     # left leg
        (11, 19, 14, 31),   # right leg
        (2, 8, 5, 18),      # left arm
        (15, 8, 18, 18),    # right arm
        (6, 0, 14, 1),      # hat
    ]),
    "cat": ((32, 20), [
        (6, 6, 26, 13),     # body
        (26, 2, 32, 8),     # head
        (21, 13, 24, 20),   # front leg
        (8, 13, 11, 20),    # hind leg
        (0, 4, 6, 6),       # tail
        (26, 0, 28, 2),     # ear
        (30, 0, 32, 2),     # second ear
    ]),
}
MAX_PARTS = 8


def gen_blob_model(alpha: float = 0.35, beta: float = 0.5, domain: GridDomain = GridDomain(64, 64)) -> GrfModel:
    """
    Short edges {(1,0),(0,1),(1,1),(-1,1)}: u = alpha on the diagonal, -alpha otherwise.
    Long edges, the short offsets scaled by 5: u = -(short) + u2 with u2 = diag(beta, -beta).
    """
    short = np.array([[alpha, -alpha], [-alpha, alpha]])
    u2 = np.array([[beta, 0.0], [0.0, -beta]])
    long = -short + u2
    pairwise = {}
    for dx, dy in SHORT_OFFSETS:
        pairwise[(dx, dy)] = short
    for dx, dy in SHORT_OFFSETS:
        pairwise[(BLOB_SCALE * dx, BLOB_SCALE * dy)] = long
    structure = NeighborhoodStructure.from_offsets(pairwise.keys())
    return build_model(domain, LabelSet(2, ("background", "blob")), structure, PotentialTable(np.zeros(2), pairwise))


def figure_mask(kind: str = "man", parts: int = 7, scale: int = 1) -> np.ndarray:
    """
    Labelling of the figure box: 0 = background, part i = label i (parts - 1 parts)
    """
    if kind not in FIGURES:
        raise ValueError(f"Unknown figure '{kind}', must be one of {list(FIGURES)}")
    if not 2 <= parts <= MAX_PARTS:
        raise ValueError(f"parts must be in 2..{MAX_PARTS}, got {parts}")
    (width, height), rects = FIGURES[kind]
    mask = np.zeros((height * scale, width * scale), dtype=np.int64)
    for label, (x0, y0, x1, y1) in enumerate(rects[:parts - 1], start=1):
        mask[y0 * scale:y1 * scale, x0 * scale:x1 * scale] = label
    return mask


def gen_composite_figure(parts: int = 7, noise: float = 0.1, seed: int = 0, size: tuple = (64, 64), kind: str = "man") -> tuple[np.ndarray, np.ndarray]:
    """
    One figure centered on the background, part k has grey level levels[k] with evenly spaced levels,
    plus Gaussian noise of standard deviation noise.
    @param size: (width, height)
    @returns image (H, W), ground truth (H, W)
    """
    width, height = size
    (fw, fh), _ = FIGURES.get(kind, ((1, 1), None))
    scale = max(1, min(width // fw, height // fh))
    mask = figure_mask(kind, parts, scale)
    if mask.shape[0] > height or mask.shape[1] > width:
        raise DimensionMismatch(f"A '{kind}' figure does not fit into {width}x{height}")
    y = np.zeros((height, width), dtype=np.int64)
    oy, ox = (height - mask.shape[0]) // 2, (width - mask.shape[1]) // 2
    y[oy:oy + mask.shape[0], ox:ox + mask.shape[1]] = mask
    levels = np.linspace(0.1, 0.9, parts)
    rng = np.random.default_rng(seed)
    image = levels[y] + noise * rng.standard_normal(y.shape)
    return image, y


def gen_collage(kinds: tuple = ("man", "cat"), instances: tuple = (1, 1), size: tuple = (128, 128), scale: int = 2, parts: int = 7,
                part_level: float = 0.7, background_level: float = 0.2, noise: float = 0.1, seed: int = 0, max_attempts: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """
    Place instances of two figure classes at random non-overlapping positions.
    All parts of both classes share one grey level, so the shape is the only cue.
    The ground truth uses the joint label set of LabelMapping.joint(parts, parts).
    @param size: (width, height)
    @returns image (H, W), ground truth (H, W)
    """
    if min(instances) < 1:
        raise ValueError(f"gen_collage: at least one instance per class is required, got {instances}")
    width, height = size
    rng = np.random.default_rng(seed)
    mapping = LabelMapping.joint(parts, parts)
    y = np.zeros((height, width), dtype=np.int64)
    occupied = np.zeros((height, width), dtype=bool)
    for i, (kind, n) in enumerate(zip(kinds, instances)):
        mask = figure_mask(kind, parts, scale)
        joint = mapping.maps[i][mask]
        mh, mw = mask.shape
        if mh > height or mw > width:
            raise PlacementFailure(f"A '{kind}' figure of size {mw}x{mh} does not fit into {width}x{height}")
        for _ in range(n):
            for _ in range(max_attempts):
                oy, ox = rng.integers(0, height - mh + 1), rng.integers(0, width - mw + 1)
                # one pixel margin between the bounding boxes
                region = occupied[max(0, oy - 1):oy + mh + 1, max(0, ox - 1):ox + mw + 1]
                if not region.any():
                    break
            else:
                raise PlacementFailure(f"Could not place a '{kind}' figure without overlap after {max_attempts} attempts")
            occupied[oy:oy + mh, ox:ox + mw] = True
            box = y[oy:oy + mh, ox:ox + mw]
            box[mask > 0] = joint[mask > 0]
    image = np.where(y > 0, part_level, background_level) + noise * rng.standard_normal(y.shape)
    log.debug(f"gen_collage: placed {sum(instances)} figures")
    return image, y


def gen_potts_baseline(labels: LabelSet = LabelSet(2), anisotropic: bool = False, neighbourhood: int = 8, strength: float = 1.0,
                       strengths: tuple | None = None, free: bool = False, domain: GridDomain = GridDomain(64, 64)) -> GrfModel:
    """
    Potts model: u_a = gamma_a on the diagonal, 0 otherwise, normalized to the canonical gauge.
    @param anisotropic: one strength per direction (strengths, defaults to strength for all)
    @param free: zero tables (to be learned) instead of Potts tables
    """
    if neighbourhood not in (4, 8):
        raise ValueError(f"neighbourhood must be 4 or 8, got {neighbourhood}")
    offsets = SHORT_OFFSETS[:2] if neighbourhood == 4 else SHORT_OFFSETS
    K = labels.count
    if strengths is None:
        strengths = (strength,) * len(offsets)
    if len(strengths) != len(offsets):
        raise DimensionMismatch(f"{len(strengths)} strengths for {len(offsets)} directions")
    if not anisotropic:
        strengths = (strengths[0],) * len(offsets)
    pairwise = {a: np.zeros((K, K)) if free else g * np.eye(K) for a, g in zip(offsets, strengths)}
    structure = NeighborhoodStructure.from_offsets(offsets)
    return build_model(domain, labels, structure, normalize_potentials(PotentialTable(np.zeros(K), pairwise)))


def gen_cells(size: int = 96, discs: int = 6, bars: int = 4, radius: int = 8, bar_length: int = 30, bar_width: int = 2,
              cell_level: float = 0.7, background_level: float = 0.3, noise: float = 0.15, seed: int = 0, max_attempts: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """
    Non-overlapping discs (label 1) and thin horizontal or vertical bars with the grey level of the discs,
    which belong to the background (label 0).
    @returns image (size, size), ground truth (size, size)
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    y = np.zeros((size, size), dtype=np.int64)
    centers = []
    for _ in range(discs):
        for _ in range(max_attempts):
            c = rng.integers(radius, size - radius, 2)
            if all(np.hypot(*(c - other)) > 2 * radius + 2 for other in centers):
                break
        else:
            raise PlacementFailure(f"Could not place {discs} discs of radius {radius} on {size}x{size}")
        centers.append(c)
        y[(yy - c[0]) ** 2 + (xx - c[1]) ** 2 <= radius ** 2] = 1
    bright = y == 1
    for _ in range(bars):
        for _ in range(max_attempts):
            vertical = rng.random() < 0.5
            h, w = (bar_length, bar_width) if vertical else (bar_width, bar_length)
            oy, ox = rng.integers(0, size - h + 1), rng.integers(0, size - w + 1)
            if not bright[max(0, oy - 2):oy + h + 2, max(0, ox - 2):ox + w + 2].any():
                break
        else:
            raise PlacementFailure(f"Could not place {bars} bars next to the discs")
        bright[oy:oy + h, ox:ox + w] = True
    image = np.where(bright, cell_level, background_level) + noise * rng.standard_normal((size, size))
    return image, y
