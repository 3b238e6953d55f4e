"""
Seeded synthetic cohorts: generated stimuli with fixations drawn around
group-specific anchors and an image-center Gaussian
"""

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.ndimage
from tqdm import tqdm

from gazepy.gaze import FIXATION_COLUMNS, CohortDataset
from gazepy.utils import Constants


ANCHOR_KINDS = (
    "regions",
    "center",
    "uniform",
    "intensity",
    "color",
    "orientation",
    "fine",
    "coarse",
    "fine_patch",
    "coarse_patch",
)

# Isoluminant with the mid-gray background
RED = (0.8, 0.35, 0.35)
GREEN = (0.35, 0.8, 0.35)


@dataclass
class GroupProfile:
    """How one age group looks at a synthetic image

    spread : float
        Scatter (px) of fixations around their anchor.

    center_weight : float
        Probability a fixation is drawn from the center Gaussian.

    anchor : str
        What the remaining fixations are anchored on, see ANCHOR_KINDS.
    """

    spread: float
    center_weight: float = 0.0
    anchor: str = "regions"

    def __post_init__(self):
        if not self.spread >= 0:
            raise ValueError(f"Fixation spread must be >= 0, got {self.spread}")

        if not 0 <= self.center_weight <= 1:
            raise ValueError(
                f"Center weight must lie in [0, 1], got {self.center_weight}"
            )

        if self.anchor not in ANCHOR_KINDS:
            raise ValueError(
                f"Unknown anchor kind '{self.anchor}', expected one of {ANCHOR_KINDS}"
            )


@dataclass
class SynthConfig:
    width: int = Constants.SYNTH_WIDTH
    height: int = Constants.SYNTH_HEIGHT
    image_count: int = Constants.SYNTH_IMAGES
    observers: int = Constants.SYNTH_OBSERVERS
    fixations_per_observer: int = Constants.SYNTH_FIXATIONS
    seed: int = 0
    center_sigma: float = Constants.SYNTH_CENTER_SIGMA
    anchor_count: int = Constants.SYNTH_ANCHORS
    profiles: dict[str, GroupProfile] = field(default_factory=dict)

    def __post_init__(self):
        if min(self.width, self.height) < Constants.MIN_IMAGE_SIDE:
            raise ValueError(
                f"Synthetic images must be at least {Constants.MIN_IMAGE_SIDE} px "
                + f"per side, got {self.width}x{self.height}"
            )

        for name, value in [
            ("image_count", self.image_count),
            ("observers", self.observers),
            ("fixations_per_observer", self.fixations_per_observer),
            ("anchor_count", self.anchor_count),
        ]:
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")

        for group in self.profiles:
            Constants.AGE_ORDINAL(group)


def Preset_Config(name: str, **overrides) -> SynthConfig:
    """Named cohort configurations

    explorativeness : spreads 10, 20, 40, 80 px from Y4 to ADULT
    agreement       : group-specific regions plus a shared center
    centerbias      : center weights 0.6, 0.4, 0.2, 0.2
    scales          : children on coarse-scale peaks, older groups on fine ones
    color           : every group on colour-conspicuity peaks
    patches         : children on coarse-patch peaks, older groups on fine ones
    age             : an age-like mix of all of the above

    Keyword overrides replace SynthConfig fields.
    """

    groups = Constants.AGE_GROUPS

    match name:
        case "explorativeness":
            profiles = {
                group: GroupProfile(spread, 0.0, "regions")
                for group, spread in zip(groups, (10, 20, 40, 80))
            }

        case "agreement":
            profiles = {group: GroupProfile(12, 0.1, "regions") for group in groups}

        case "centerbias":
            profiles = {
                group: GroupProfile(0, weight, "uniform")
                for group, weight in zip(groups, (0.6, 0.4, 0.2, 0.2))
            }

        case "scales":
            profiles = {
                "Y4": GroupProfile(8, 0.0, "coarse"),
                "Y6": GroupProfile(8, 0.0, "coarse"),
                "Y8": GroupProfile(3, 0.0, "fine"),
                "ADULT": GroupProfile(3, 0.0, "fine"),
            }

        case "color":
            profiles = {group: GroupProfile(6, 0.0, "color") for group in groups}

        case "patches":
            profiles = {
                "Y4": GroupProfile(8, 0.0, "coarse_patch"),
                "Y6": GroupProfile(8, 0.0, "coarse_patch"),
                "Y8": GroupProfile(3, 0.0, "fine_patch"),
                "ADULT": GroupProfile(3, 0.0, "fine_patch"),
            }

        case "age":
            profiles = {
                "Y4": GroupProfile(10, 0.6, "coarse"),
                "Y6": GroupProfile(20, 0.4, "coarse"),
                "Y8": GroupProfile(40, 0.2, "fine"),
                "ADULT": GroupProfile(80, 0.2, "fine"),
            }

        case _:
            raise ValueError(f"Unknown synthetic preset: {name}")

    return SynthConfig(**{"profiles": profiles, **overrides})


def _Disc_Mask(width: int, height: int, x: float, y: float, radius: float) -> np.ndarray:
    rows, columns = np.ogrid[0:height, 0:width]
    return (columns - x) ** 2 + (rows - y) ** 2 <= radius**2


def Synth_Image(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    """Mid-gray stimulus with structure at several scales

    Coarse intensity discs, small fine squares, isoluminant red and
    green blobs and one oriented grating patch. Values are quantised to
    8 bits so the image survives a PNG round trip unchanged.
    """

    image = np.full((height, width, 3), 0.5)
    short_side = min(width, height)

    # Coarse discs
    radius = short_side / 8
    for _ in range(2):
        x = rng.uniform(radius, width - radius)
        y = rng.uniform(radius, height - radius)
        image[_Disc_Mask(width, height, x, y, radius)] = rng.choice([0.15, 0.85])

    # Grating patch
    side = short_side // 6
    x0 = int(rng.integers(0, width - side))
    y0 = int(rng.integers(0, height - side))
    orientation = np.deg2rad(rng.choice(Constants.ORIENTATIONS))
    rows, columns = np.mgrid[0:side, 0:side]
    across = -columns * np.sin(orientation) + rows * np.cos(orientation)
    grating = 0.5 + 0.25 * np.sin(2 * np.pi * across / 8)
    image[y0 : y0 + side, x0 : x0 + side] = grating[..., np.newaxis]

    # Isoluminant colour blobs
    blob_radius = short_side / 20
    for colour in [RED, GREEN]:
        x = rng.uniform(blob_radius, width - blob_radius)
        y = rng.uniform(blob_radius, height - blob_radius)
        image[_Disc_Mask(width, height, x, y, blob_radius)] = colour

    # Fine squares
    square = max(2, short_side // 64)
    for _ in range(6):
        x = int(rng.integers(0, width - square))
        y = int(rng.integers(0, height - square))
        image[y : y + square, x : x + square] = rng.choice([0.0, 1.0])

    return np.round(image * 255) / 255


def Peak_Anchors(
    saliency_map: np.ndarray,
    count: int,
    separation: float = Constants.SYNTH_ANCHOR_SEPARATION,
) -> np.ndarray:
    """Strongest local maxima at least `separation` px apart

    Returns an (n, 2) array of (x, y), at most `count` rows. A map with
    no maxima gives its center.
    """

    is_peak = (
        scipy.ndimage.maximum_filter(saliency_map, size=5, mode="nearest") == saliency_map
    ) & (saliency_map > 0)

    ys, xs = np.nonzero(is_peak)
    values = saliency_map[ys, xs]

    order = np.lexsort((ys * saliency_map.shape[1] + xs, -values))

    anchors: list[tuple[float, float]] = []
    for index in order:
        candidate = (float(xs[index]), float(ys[index]))
        if all(math.dist(candidate, anchor) >= separation for anchor in anchors):
            anchors.append(candidate)
        if len(anchors) == count:
            break

    if len(anchors) == 0:
        height, width = saliency_map.shape
        anchors.append(((width - 1) / 2, (height - 1) / 2))

    return np.array(anchors)


def Region_Anchors(group: str, width: int, height: int) -> np.ndarray:
    """Ring positions unique to a group, plus the shared image center

    Each group's ring is rotated by a quarter of the ring spacing from
    the previous group's.
    """

    regions = Constants.SYNTH_REGIONS
    ordinal = Constants.AGE_ORDINAL(group)

    radius = Constants.SYNTH_REGION_RADIUS * min(width, height)
    center_x, center_y = (width - 1) / 2, (height - 1) / 2

    angles = 2 * np.pi * (np.arange(regions) + ordinal / len(Constants.AGE_GROUPS)) / regions

    ring = np.column_stack(
        [center_x + radius * np.cos(angles), center_y + radius * np.sin(angles)]
    )

    return np.vstack([ring, [[center_x, center_y]]])


def Feature_Anchor_Map(image: np.ndarray, kind: str) -> np.ndarray:
    """The model map whose peaks anchor a feature-driven group"""

    from gazepy.itti import Combine_Conspicuity, Extract_Feature_Maps, Saliency_SC
    from gazepy.patches import Patch_Saliency_Map
    from gazepy.raster import Resize_Bilinear

    height, width = image.shape[:2]

    match kind:
        case "intensity" | "color" | "orientation":
            conspicuity = Combine_Conspicuity(Extract_Feature_Maps(image))
            return Resize_Bilinear(getattr(conspicuity, kind), width, height)

        case "fine":
            return Saliency_SC(image, subset=1, subset_end=2)

        case "coarse":
            return Saliency_SC(image, subset=5, subset_end=6)

        case "fine_patch":
            return Patch_Saliency_Map(image, Constants.PATCH_SIZES[0])

        case "coarse_patch":
            return Patch_Saliency_Map(image, Constants.PATCH_SIZES[-1])

    raise ValueError(f"Anchor kind '{kind}' is not feature driven")


def Group_Anchors(
    image: np.ndarray, group: str, profile: GroupProfile, anchor_count: int
) -> np.ndarray | None:
    """(n, 2) anchor positions, or None for uniform viewing"""

    height, width = image.shape[:2]

    match profile.anchor:
        case "uniform":
            return None
        case "center":
            return np.array([[(width - 1) / 2, (height - 1) / 2]])
        case "regions":
            return Region_Anchors(group, width, height)

    return Peak_Anchors(Feature_Anchor_Map(image, profile.anchor), anchor_count)


def Draw_Fixations(
    rng: np.random.Generator,
    count: int,
    anchors: np.ndarray | None,
    profile: GroupProfile,
    width: int,
    height: int,
    center_sigma: float,
    max_redraws: int = Constants.SYNTH_MAX_REDRAWS,
) -> np.ndarray:
    """(count, 2) integer (x, y) fixations inside the image

    A draw that rounds to a pixel outside the image is redrawn. After
    `max_redraws` rejections the last draw is clipped to the image.
    """

    center = np.array([(width - 1) / 2, (height - 1) / 2])
    upper = np.array([width - 1, height - 1])
    points = np.empty((count, 2))

    for i in range(count):
        for _ in range(max_redraws + 1):
            if rng.random() < profile.center_weight:
                point = center + rng.normal(0, center_sigma, 2)
            elif anchors is None:
                point = rng.uniform([0, 0], [width, height])
            else:
                anchor = anchors[rng.integers(len(anchors))]
                point = anchor + rng.normal(0, profile.spread, 2)

            point = np.floor(point + 0.5)
            if np.all(point >= 0) and np.all(point <= upper):
                break

        points[i] = np.clip(point, 0, upper)

    return points.astype(np.int64)


def Synth_Cohort(config: SynthConfig, verbose: bool = False) -> CohortDataset:
    """Generates a deterministic synthetic cohort

    Every random draw comes from one generator seeded with
    `config.seed`, consumed in a fixed order: image, then per group in
    age order its observers' fixations.


    Parameters
    ----------
    config : SynthConfig
        Image geometry, cohort size and a GroupProfile per group.

    verbose : bool {False, True}, optional
        Show a progress bar.


    Returns
    -------
    dataset : CohortDataset
        Images named synth_000, synth_001, ...; observers named
        <group>_00, <group>_01, ...
    """

    if len(config.profiles) == 0:
        raise ValueError("A synthetic cohort needs at least one group profile")

    rng = np.random.default_rng(config.seed)

    groups = [group for group in Constants.AGE_GROUPS if group in config.profiles]

    images: dict[str, np.ndarray] = {}
    rows = []

    for index in tqdm(
        range(config.image_count), desc="Generating cohort", disable=not verbose
    ):
        image_id = f"synth_{index:03d}"
        image = Synth_Image(config.width, config.height, rng)
        images[image_id] = image

        for group in groups:
            profile = config.profiles[group]
            anchors = Group_Anchors(image, group, profile, config.anchor_count)

            for observer in range(config.observers):
                points = Draw_Fixations(
                    rng,
                    config.fixations_per_observer,
                    anchors,
                    profile,
                    config.width,
                    config.height,
                    config.center_sigma,
                )

                for ordinal, (x, y) in enumerate(points):
                    rows.append(
                        (f"{group}_{observer:02d}", group, image_id, x, y, ordinal)
                    )

    fixations = pd.DataFrame(rows, columns=FIXATION_COLUMNS)
    fixations = fixations.astype({"x": np.int64, "y": np.int64, "ordinal": np.int64})

    return CohortDataset(images=images, fixations=fixations)
