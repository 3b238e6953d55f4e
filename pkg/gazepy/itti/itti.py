"""
Multi-scale center-surround features, conspicuity maps and the
scale-subset saliency model
"""

from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd
import scipy.ndimage

from gazepy.gaze import Build_Fixation_Map, CohortDataset
from gazepy.raster import (
    Build_Gaussian_Pyramid,
    Check_Color_Image,
    Normalize_Raster,
    Resize_Bilinear,
)
from gazepy.utils import Constants, Map_In_Parallel


@dataclass
class FeatureMaps:
    """The 42 center-surround maps of one image

    Every list is indexed by scale: element 0 is scale 1 (finest pair)
    and element 5 is scale 6 (coarsest pair). Maps are stored at their
    center level's resolution.
    """

    intensity: list[np.ndarray]
    color_rg: list[np.ndarray]
    color_by: list[np.ndarray]
    orientation: dict[int, list[np.ndarray]]
    scale_pairs: list[tuple[int, int]]
    image_shape: tuple[int, int]
    combination_shape: tuple[int, int]

    @property
    def count(self) -> int:
        return (
            len(self.intensity)
            + len(self.color_rg)
            + len(self.color_by)
            + sum(len(maps) for maps in self.orientation.values())
        )


@dataclass
class ConspicuityMaps:
    intensity: np.ndarray
    color: np.ndarray
    orientation: np.ndarray
    subset_start: int
    subset_end: int = Constants.NUM_SCALES

    def stacked(self) -> np.ndarray:
        """(3, h, w) array in intensity, color, orientation order"""
        return np.stack([self.intensity, self.color, self.orientation])


def Scale_Pairs(
    center_scales: tuple = Constants.CENTER_SCALES,
    surround_deltas: tuple = Constants.SURROUND_DELTAS,
) -> list[tuple[int, int]]:
    """(center, surround) pyramid levels, finest first"""
    return [(c, c + delta) for c in center_scales for delta in surround_deltas]


def Subset_Label(start: int, end: int = Constants.NUM_SCALES) -> str:
    return f"{start}~{end}"


def Check_Subset(start: int, end: int, maximum: int) -> None:
    if not (1 <= start <= end <= maximum):
        raise ValueError(
            f"Invalid subset {start}~{end}, expected 1 <= start <= end <= {maximum}"
        )


def Opponent_Channels(image: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intensity and the red-green and blue-yellow opponent planes

    Broadly tuned R, G, B, Y channels are clamped at zero and
    normalised by intensity wherever intensity exceeds a tenth of its
    maximum. Elsewhere they are zero.
    """

    red, green, blue = image[..., 0], image[..., 1], image[..., 2]
    intensity = (red + green + blue) / 3

    tuned_red = np.maximum(red - (green + blue) / 2, 0)
    tuned_green = np.maximum(green - (red + blue) / 2, 0)
    tuned_blue = np.maximum(blue - (red + green) / 2, 0)
    tuned_yellow = np.maximum((red + green) / 2 - np.abs(red - green) / 2 - blue, 0)

    mask = intensity > Constants.COLOR_INTENSITY_FLOOR * intensity.max()
    scale = np.zeros_like(intensity)
    scale[mask] = 1 / intensity[mask]

    red_green = (tuned_red - tuned_green) * scale
    blue_yellow = (tuned_blue - tuned_yellow) * scale

    return intensity, red_green, blue_yellow


def Gabor_Kernels(
    orientation: float,
    wavelength: float = Constants.GABOR_WAVELENGTH,
    sigma: float = Constants.GABOR_SIGMA,
    aspect: float = Constants.GABOR_ASPECT,
) -> tuple[np.ndarray, np.ndarray]:
    """Even (zero-mean) and odd Gabor kernels tuned to a grating orientation

    `orientation` is the orientation of the grating stripes in degrees,
    so 90 responds to vertical stripes and 0 to horizontal ones.
    """

    radius = int(np.ceil(3 * sigma))
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1].astype(np.float64)

    theta = np.deg2rad(orientation)
    across = -x * np.sin(theta) + y * np.cos(theta)
    along = x * np.cos(theta) + y * np.sin(theta)

    envelope = np.exp(-(across**2 + (aspect * along) ** 2) / (2 * sigma**2))

    even = envelope * np.cos(2 * np.pi * across / wavelength)
    even -= envelope * (even.sum() / envelope.sum())
    odd = envelope * np.sin(2 * np.pi * across / wavelength)

    return even, odd


def Gabor_Energy(raster: np.ndarray, even: np.ndarray, odd: np.ndarray) -> np.ndarray:
    even_response = scipy.ndimage.correlate(raster, even, mode="reflect")
    odd_response = scipy.ndimage.correlate(raster, odd, mode="reflect")

    return np.sqrt(even_response**2 + odd_response**2)


def Attenuate_Borders(raster: np.ndarray, fraction: float = Constants.BORDER_FADE) -> np.ndarray:
    """Linear fade to zero over the outer `fraction` of each side"""

    def Ramp(length: int) -> np.ndarray:
        band = max(1, int(round(fraction * length)))
        indices = np.arange(length)
        distance = np.minimum(indices, indices[::-1])

        return np.minimum(1.0, (distance + 1) / (band + 1))

    height, width = raster.shape

    return raster * np.outer(Ramp(height), Ramp(width))


def Center_Surround(levels: list[np.ndarray], pairs: list[tuple[int, int]]) -> list[np.ndarray]:
    """|center - surround| with the surround upsampled to the center level

    Each difference map is border-attenuated.
    """

    maps = []
    for center, surround in pairs:
        height, width = levels[center].shape
        difference = np.abs(
            levels[center] - Resize_Bilinear(levels[surround], width, height)
        )
        maps.append(Attenuate_Borders(difference))

    return maps


def Extract_Feature_Maps(image: np.ndarray) -> FeatureMaps:
    """Intensity, colour-opponent and orientation center-surround maps

    Parameters
    ----------
    image : numpy.ndarray
        Colour image (h, w, 3) in [0, 1], at least 128 px per side.


    Returns
    -------
    features : FeatureMaps
        6 intensity, 6 + 6 colour and 4 x 6 orientation maps.
    """

    image = Check_Color_Image(image)

    if min(image.shape[:2]) < Constants.MIN_IMAGE_SIDE:
        raise ValueError(
            f"Image {image.shape[1]}x{image.shape[0]} is too small, "
            + f"features need at least {Constants.MIN_IMAGE_SIDE} px per side"
        )

    pairs = Scale_Pairs()
    levels = max(surround for _, surround in pairs) + 1

    intensity, red_green, blue_yellow = Opponent_Channels(image)

    intensity_pyramid = Build_Gaussian_Pyramid(intensity, levels)
    red_green_pyramid = Build_Gaussian_Pyramid(red_green, levels)
    blue_yellow_pyramid = Build_Gaussian_Pyramid(blue_yellow, levels)

    first_center = min(center for center, _ in pairs)

    orientation_maps = {}
    for orientation in Constants.ORIENTATIONS:
        even, odd = Gabor_Kernels(orientation)

        # Levels below the finest center are never compared
        energy_pyramid = [
            Gabor_Energy(level, even, odd) if index >= first_center else level
            for index, level in enumerate(intensity_pyramid)
        ]

        orientation_maps[orientation] = Center_Surround(energy_pyramid, pairs)

    return FeatureMaps(
        intensity=Center_Surround(intensity_pyramid, pairs),
        color_rg=Center_Surround(red_green_pyramid, pairs),
        color_by=Center_Surround(blue_yellow_pyramid, pairs),
        orientation=orientation_maps,
        scale_pairs=pairs,
        image_shape=image.shape[:2],
        combination_shape=intensity_pyramid[Constants.COMBINATION_LEVEL].shape,
    )


def Local_Maxima(raster: np.ndarray) -> np.ndarray:
    """Values of the local maxima of a raster, one per peak

    A peak is an 8-connected plateau of equal pixels with no higher
    neighbour and at least one lower one, so a maximum spread over
    several pixels counts once.
    """

    neighbourhood_max = scipy.ndimage.maximum_filter(raster, size=3, mode="nearest")
    neighbourhood_min = scipy.ndimage.minimum_filter(raster, size=3, mode="nearest")

    # Adjacent pixels that both equal their neighbourhood max are equal
    labels, count = scipy.ndimage.label(
        raster == neighbourhood_max, structure=np.ones((3, 3))
    )

    if count == 0:
        return np.empty(0)

    index = np.arange(1, count + 1)
    values = np.asarray(scipy.ndimage.maximum(raster, labels, index))
    lowest = np.asarray(scipy.ndimage.minimum(neighbourhood_min, labels, index))

    return values[lowest < values]


def Itti_Normalize(feature_map: np.ndarray) -> np.ndarray:
    """Global-maximum promotion

    Range-normalises the map, then scales it by (1 - m)^2 where m is the
    mean of its local maxima other than the global maximum.
    """

    normalized = Normalize_Raster(feature_map)

    if normalized.max() == 0:
        return normalized

    peaks = Local_Maxima(normalized)

    # Drop one instance of the global maximum
    others = np.delete(peaks, np.argmax(peaks))
    mean_peak = others.mean() if others.size > 0 else 0.0

    return normalized * (1 - mean_peak) ** 2


def _Combine(maps: list[np.ndarray], shape: tuple[int, int]) -> np.ndarray:
    height, width = shape
    return sum(Resize_Bilinear(Itti_Normalize(feature_map), width, height) for feature_map in maps)


def Combine_Conspicuity(
    features: FeatureMaps,
    subset: int = 1,
    subset_end: int = Constants.NUM_SCALES,
) -> ConspicuityMaps:
    """Across-scale sums of the normalised maps of scales subset..subset_end

    Each conspicuity map is finally range-normalised. The orientation
    map sums the per-orientation combinations.
    """

    Check_Subset(subset, subset_end, Constants.NUM_SCALES)

    scales = range(subset - 1, subset_end)
    shape = features.combination_shape

    intensity = _Combine([features.intensity[i] for i in scales], shape)
    color = _Combine([features.color_rg[i] for i in scales], shape) + _Combine(
        [features.color_by[i] for i in scales], shape
    )
    orientation = sum(
        _Combine([maps[i] for i in scales], shape)
        for maps in features.orientation.values()
    )

    return ConspicuityMaps(
        intensity=Normalize_Raster(intensity),
        color=Normalize_Raster(color),
        orientation=Normalize_Raster(orientation),
        subset_start=subset,
        subset_end=subset_end,
    )


def Saliency_From_Conspicuity(
    conspicuity: ConspicuityMaps, width: int, height: int, center_weight: float = 0.0
) -> np.ndarray:
    """Unweighted mean of the conspicuity maps, upsampled and center blended"""

    from gazepy.learning import Blend_Center_Weight

    saliency = Normalize_Raster(
        (conspicuity.intensity + conspicuity.color + conspicuity.orientation) / 3
    )
    saliency = Normalize_Raster(Resize_Bilinear(saliency, width, height))

    return Blend_Center_Weight(saliency, center_weight)


def Saliency_SC(
    image: np.ndarray,
    subset: int = 1,
    center_weight: float = 0.0,
    subset_end: int = Constants.NUM_SCALES,
    features: FeatureMaps | None = None,
) -> np.ndarray:
    """Scale-subset saliency with a center-weight blend

    Parameters
    ----------
    image : numpy.ndarray
        Colour image (h, w, 3) in [0, 1].

    subset : int {1, ..., 6}, optional
        First scale combined, 1 is the finest.

    center_weight : float, optional
        Blend weight w_k of the center surface, in [0, 1].

    subset_end : int {6}, optional
        Last scale combined.

    features : FeatureMaps, optional
        Precomputed features for `image`.


    Returns
    -------
    saliency : numpy.ndarray
        (1 - w_k) S + w_k C at the image resolution.
    """

    if features is None:
        features = Extract_Feature_Maps(image)

    height, width = features.image_shape

    return Saliency_From_Conspicuity(
        Combine_Conspicuity(features, subset, subset_end), width, height, center_weight
    )


def _Image_Subset_Aucs(
    task: tuple[np.ndarray, np.ndarray],
    subsets: list[int],
    center_weight: float,
    num_thresholds: int,
) -> list[float]:

    from gazepy.analysis import Roc_Auc

    image, fixation_map = task
    features = Extract_Feature_Maps(image)

    return [
        Roc_Auc(
            Saliency_SC(image, subset, center_weight, features=features),
            fixation_map,
            num_thresholds,
        ).auc
        for subset in subsets
    ]


def Select_Best_Subset(
    dataset: CohortDataset,
    group: str,
    subsets: tuple = tuple(range(1, Constants.NUM_SCALES + 1)),
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    center_weight: float = 0.0,
    tie_tolerance: float = 0.0,
    processes: int | None = 1,
    verbose: bool = False,
) -> tuple[int, pd.Series]:
    """Scale subset whose saliency best predicts a group's fixations

    Every subset s~6 is scored by the mean ROC area of `Saliency_SC`
    against the group's fixation maps over the images it viewed.
    Subsets within `tie_tolerance` of the best score count as tied and
    ties go to the coarser (larger) subset. The default of 0 only merges
    exact ties. A group scoring at chance (every subset within
    `Constants.AUC_CHANCE_BAND` of 0.5) spans up to twice that band, so
    pass `2 * Constants.AUC_CHANCE_BAND` to resolve it to the coarsest
    subset.

    `sigma` is accepted for signature parity with the other evaluations;
    the ROC area depends on fixation pixels only.


    Returns
    -------
    best : int
        Selected subset start.

    scores : pandas.Series
        Mean ROC area per subset start.
    """

    subsets = list(subsets)
    for subset in subsets:
        Check_Subset(subset, Constants.NUM_SCALES, Constants.NUM_SCALES)

    tasks = [
        (dataset.images[image_id], Build_Fixation_Map(dataset, group, image_id))
        for image_id in dataset.image_ids
        if dataset.has_fixations(group, image_id)
    ]

    if len(tasks) == 0:
        raise ValueError(f"Group {group} has no fixations to evaluate")

    image_aucs = Map_In_Parallel(
        partial(
            _Image_Subset_Aucs,
            subsets=subsets,
            center_weight=center_weight,
            num_thresholds=num_thresholds,
        ),
        tasks,
        processes=processes,
        desc=f"Scoring scale subsets ({group})",
        verbose=verbose,
    )

    scores = pd.Series(
        np.mean(image_aucs, axis=0), index=subsets, name=group, dtype=np.float64
    )

    return Tie_Break_Coarser(scores, tie_tolerance), scores


def Tie_Break_Coarser(scores: pd.Series, tie_tolerance: float = 0.0) -> int:
    """Largest index whose score is within tie_tolerance of the best"""

    best = scores.max()
    tied = [index for index, value in scores.items() if value >= best - tie_tolerance]

    return int(max(tied))
