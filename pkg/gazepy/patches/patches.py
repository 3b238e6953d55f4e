"""
Patch-dissimilarity saliency: L*a*b* and gradient patch features, a PCA
basis and spatially discounted dissimilarity between patches
"""

from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd
import scipy.spatial.distance
import skimage.color

from gazepy.gaze import Build_Fixation_Map, CohortDataset
from gazepy.itti import Tie_Break_Coarser
from gazepy.learning import Center_Weight_At
from gazepy.raster import Check_Color_Image, Normalize_Raster
from gazepy.utils import Constants, Map_In_Parallel


PATCH_PLANES = ("L", "a", "b", "Ix", "Iy")
DISTANCE_METRICS = {"l1": "cityblock", "l2": "euclidean"}

# Rows of the dissimilarity matrix held in memory at once
BLOCK_ROWS = 512


@dataclass
class PatchFeatureMatrix:
    """Non-overlapping t x t patches as columns

    Each column stacks the L*, a*, b*, Ix and Iy planes of one patch,
    t^2 entries each in row-major order. Patches are ordered row-major
    over the patch grid.
    """

    patch_size: int
    grid_shape: tuple[int, int]
    matrix: np.ndarray

    @property
    def patch_count(self) -> int:
        return self.matrix.shape[1]

    @property
    def feature_length(self) -> int:
        return self.matrix.shape[0]

    def grid_positions(self) -> np.ndarray:
        """(row, column) of every patch in grid units"""
        rows, columns = np.divmod(np.arange(self.patch_count), self.grid_shape[1])
        return np.column_stack([rows, columns]).astype(np.float64)


@dataclass
class PcaBasis:
    mean: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float

    @property
    def dimension(self) -> int:
        return self.eigenvectors.shape[1]

    def project(self, matrix: np.ndarray) -> np.ndarray:
        """(d, n) coordinates of the centered columns"""
        return self.eigenvectors.T @ (matrix - self.mean[:, np.newaxis])


def Check_Patch_Size(patch_size: int) -> None:
    if patch_size not in Constants.PATCH_SIZES:
        raise ValueError(
            f"Patch size {patch_size} is not one of {Constants.PATCH_SIZES}"
        )


def Build_Patch_Matrix(image: np.ndarray, patch_size: int) -> PatchFeatureMatrix:
    """Feature matrix of the non-overlapping patches of an image

    The image is converted to CIE L*a*b* (D65) and Ix, Iy are central
    differences of the L* plane. Trailing rows and columns that do not
    fill a whole patch are discarded.


    Parameters
    ----------
    image : numpy.ndarray
        Colour image (h, w, 3) in [0, 1].

    patch_size : int {8, 16, 32, 64}
        Patch side t in pixels.


    Returns
    -------
    patches : PatchFeatureMatrix
        Matrix of shape (5 t^2, n_p).
    """

    image = Check_Color_Image(image)
    Check_Patch_Size(patch_size)

    height, width = image.shape[:2]
    if patch_size > min(width, height):
        raise ValueError(
            f"Patch size {patch_size} is larger than the {width}x{height} image"
        )

    lab = skimage.color.rgb2lab(image, illuminant="D65")
    lightness = lab[..., 0]

    planes = np.stack(
        [
            lightness,
            lab[..., 1],
            lab[..., 2],
            np.gradient(lightness, axis=1),
            np.gradient(lightness, axis=0),
        ]
    )

    rows = height // patch_size
    columns = width // patch_size

    planes = planes[:, : rows * patch_size, : columns * patch_size]

    # (plane, row, y, column, x) -> (row, column, plane, y, x)
    blocks = planes.reshape(len(PATCH_PLANES), rows, patch_size, columns, patch_size)
    blocks = blocks.transpose(1, 3, 0, 2, 4)

    matrix = blocks.reshape(rows * columns, len(PATCH_PLANES) * patch_size**2).T

    return PatchFeatureMatrix(
        patch_size=patch_size,
        grid_shape=(rows, columns),
        matrix=np.ascontiguousarray(matrix),
    )


def PCA_Basis(patches: PatchFeatureMatrix | np.ndarray, dimension: int) -> PcaBasis:
    """Top principal directions of the patch columns

    The covariance is that of the mean-centered columns with an n - 1
    denominator. Each eigenvector is signed so its largest-magnitude
    entry is positive.


    Parameters
    ----------
    patches : PatchFeatureMatrix | numpy.ndarray
        Feature matrix, one column per patch.

    dimension : int
        Number of eigenpairs d kept.


    Returns
    -------
    basis : PcaBasis
        Eigenvalues in descending order.
    """

    matrix = patches.matrix if isinstance(patches, PatchFeatureMatrix) else patches
    matrix = np.asarray(matrix, dtype=np.float64)

    if matrix.ndim != 2:
        raise ValueError(f"Feature matrix must be 2-D, got shape {matrix.shape}")

    feature_length, count = matrix.shape

    if count < 2:
        raise ValueError(f"PCA needs at least two columns, got {count}")

    if not 1 <= dimension <= min(feature_length, count):
        raise ValueError(
            f"PCA dimension {dimension} outside 1..{min(feature_length, count)}"
        )

    mean = matrix.mean(axis=1)
    centered = matrix - mean[:, np.newaxis]

    left_vectors, singular_values, _ = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = singular_values**2 / (count - 1)

    eigenvectors = left_vectors[:, :dimension].copy()

    largest = np.argmax(np.abs(eigenvectors), axis=0)
    signs = np.sign(eigenvectors[largest, np.arange(dimension)])
    signs[signs == 0] = 1
    eigenvectors *= signs

    return PcaBasis(
        mean=mean,
        eigenvectors=eigenvectors,
        eigenvalues=eigenvalues[:dimension],
        total_variance=float(eigenvalues.sum()),
    )


def Patch_Center_Weights(
    patches: PatchFeatureMatrix, width: int, height: int, center_weight: float
) -> np.ndarray:
    """omega(i) = (1 - w) + w C(i), C evaluated at each patch center pixel"""

    if not 0 <= center_weight <= 1:
        raise ValueError(f"Center weight must lie in [0, 1], got {center_weight}")

    positions = patches.grid_positions()
    offset = (patches.patch_size - 1) / 2

    center_x = positions[:, 1] * patches.patch_size + offset
    center_y = positions[:, 0] * patches.patch_size + offset

    return (1 - center_weight) + center_weight * Center_Weight_At(
        center_x, center_y, width, height
    )


def Patch_Dissimilarity(
    coordinates: np.ndarray,
    positions: np.ndarray,
    neighbours: int | None = None,
    distance: str = "l1",
) -> np.ndarray:
    """Sum over neighbouring patches of feature distance / (1 + grid distance)

    Parameters
    ----------
    coordinates : numpy.ndarray
        (n_p, d) reduced patch features.

    positions : numpy.ndarray
        (n_p, 2) patch grid positions.

    neighbours : int, optional
        Only the nearest patches by grid distance are summed, ties by
        index. Defaults to every other patch.

    distance : str {"l1", "l2"}, optional
        Metric in the reduced space.


    Returns
    -------
    dissimilarity : numpy.ndarray
        (n_p,) summed dissimilarity per patch.
    """

    if distance not in DISTANCE_METRICS:
        raise ValueError(
            f"Unknown patch distance '{distance}', expected one of {list(DISTANCE_METRICS)}"
        )

    count = len(coordinates)

    if neighbours is not None and not 1 <= neighbours <= count - 1:
        raise ValueError(f"Neighbour count {neighbours} outside 1..{count - 1}")

    use_all = neighbours is None or neighbours == count - 1

    sums = np.zeros(count)
    for start in range(0, count, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, count)

        feature_distance = scipy.spatial.distance.cdist(
            coordinates[start:stop], coordinates, DISTANCE_METRICS[distance]
        )
        grid_distance = scipy.spatial.distance.cdist(positions[start:stop], positions)

        weighted = feature_distance / (1 + grid_distance)

        if use_all:
            # The self term is zero
            sums[start:stop] = weighted.sum(axis=1)
            continue

        for row, i in enumerate(range(start, stop)):
            order = np.argsort(grid_distance[row], kind="stable")
            order = order[order != i][:neighbours]
            sums[i] = weighted[row, order].sum()

    return sums


def Paint_Patches(
    values: np.ndarray, grid_shape: tuple[int, int], patch_size: int, width: int, height: int
) -> np.ndarray:
    """Fills each patch block with its value, edge-padding the leftover strips"""

    blocks = np.repeat(
        np.repeat(values.reshape(grid_shape), patch_size, axis=0), patch_size, axis=1
    )

    return np.pad(
        blocks,
        ((0, height - blocks.shape[0]), (0, width - blocks.shape[1])),
        mode="edge",
    )


def Patch_Saliency_Map(
    image: np.ndarray,
    patch_size: int,
    dimension: int = Constants.PCA_DIMENSIONS,
    center_weight: float = 0.0,
    neighbours: int | None = None,
    distance: str = "l1",
) -> np.ndarray:
    """Patch-dissimilarity saliency at one patch size

    Each patch scores omega(i) times its summed dissimilarity to its
    neighbours in the PCA-reduced space, divided by 1 + their distance
    on the patch grid. A contrast-free image scores omega alone.


    Parameters
    ----------
    image : numpy.ndarray
        Colour image (h, w, 3) in [0, 1].

    patch_size : int {8, 16, 32, 64}
        Patch side t in pixels.

    dimension : int {10}, optional
        PCA dimension d, clamped to the number of available components.

    center_weight : float {0}, optional
        Center-bias weight w_k in [0, 1].

    neighbours : int, optional
        Number of nearest patches summed, defaults to all.

    distance : str {"l1", "l2"}, optional
        Metric in the reduced space.


    Returns
    -------
    saliency : numpy.ndarray
        Range-normalised map at the image resolution.
    """

    image = Check_Color_Image(image)
    height, width = image.shape[:2]

    patches = Build_Patch_Matrix(image, patch_size)
    omega = Patch_Center_Weights(patches, width, height, center_weight)

    if patches.patch_count < 2:
        dissimilarity = np.zeros(patches.patch_count)

    else:
        dimension = min(dimension, patches.feature_length, patches.patch_count)
        basis = PCA_Basis(patches, dimension)

        dissimilarity = Patch_Dissimilarity(
            basis.project(patches.matrix).T,
            patches.grid_positions(),
            neighbours,
            distance,
        )

    if np.all(dissimilarity == 0):
        values = omega
    else:
        values = omega * dissimilarity

    return Normalize_Raster(
        Paint_Patches(values, patches.grid_shape, patch_size, width, height)
    )


def Patch_Subset_Sizes(start: int, end: int = len(Constants.PATCH_SIZES)) -> tuple:
    """Patch sizes of subset start~end, fine to coarse"""

    if not 1 <= start <= end <= len(Constants.PATCH_SIZES):
        raise ValueError(
            f"Invalid patch subset {start}~{end}, "
            + f"expected 1 <= start <= end <= {len(Constants.PATCH_SIZES)}"
        )

    return Constants.PATCH_SIZES[start - 1 : end]


def Average_Patch_Maps(maps: list[np.ndarray]) -> np.ndarray:
    """A single map passes through unchanged, several are averaged and
    normalised"""

    if len(maps) == 1:
        return maps[0]

    return Normalize_Raster(np.mean(maps, axis=0))


def Multi_Size_Patch_Map(
    image: np.ndarray,
    patch_sizes: tuple = Constants.PATCH_SIZES,
    dimension: int = Constants.PCA_DIMENSIONS,
    center_weight: float = 0.0,
    neighbours: int | None = None,
    distance: str = "l1",
) -> np.ndarray:

    if len(patch_sizes) == 0:
        raise ValueError("At least one patch size is needed")

    return Average_Patch_Maps(
        [
            Patch_Saliency_Map(
                image, patch_size, dimension, center_weight, neighbours, distance
            )
            for patch_size in patch_sizes
        ]
    )


def _Image_Patch_Subset_Aucs(
    task: tuple[np.ndarray, np.ndarray],
    subsets: list[int],
    dimension: int,
    center_weight: float,
    num_thresholds: int,
) -> list[float]:

    from gazepy.analysis import Roc_Auc

    image, fixation_map = task

    needed = sorted({size for subset in subsets for size in Patch_Subset_Sizes(subset)})
    size_maps = {
        size: Patch_Saliency_Map(image, size, dimension, center_weight) for size in needed
    }

    return [
        Roc_Auc(
            Average_Patch_Maps([size_maps[size] for size in Patch_Subset_Sizes(subset)]),
            fixation_map,
            num_thresholds,
        ).auc
        for subset in subsets
    ]


def Select_Patch_Subset(
    dataset: CohortDataset,
    group: str,
    subsets: tuple = tuple(range(1, len(Constants.PATCH_SIZES) + 1)),
    dimension: int = Constants.PCA_DIMENSIONS,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    center_weight: float = 0.0,
    tie_tolerance: float = 0.0,
    processes: int | None = 1,
    verbose: bool = False,
) -> tuple[int, pd.Series]:
    """Patch-size subset a~4 whose saliency best predicts a group

    Ties (within `tie_tolerance`) go to the coarser subset. `sigma` is
    accepted for parity with the other evaluations.


    Returns
    -------
    best : int
        Selected subset start.

    scores : pandas.Series
        Mean ROC area per subset start.
    """

    subsets = list(subsets)
    for subset in subsets:
        Patch_Subset_Sizes(subset)

    tasks = [
        (dataset.images[image_id], Build_Fixation_Map(dataset, group, image_id))
        for image_id in dataset.image_ids
        if dataset.has_fixations(group, image_id)
    ]

    if len(tasks) == 0:
        raise ValueError(f"Group {group} has no fixations to evaluate")

    image_aucs = Map_In_Parallel(
        partial(
            _Image_Patch_Subset_Aucs,
            subsets=subsets,
            dimension=dimension,
            center_weight=center_weight,
            num_thresholds=num_thresholds,
        ),
        tasks,
        processes=processes,
        desc=f"Scoring patch subsets ({group})",
        verbose=verbose,
    )

    scores = pd.Series(
        np.mean(image_aucs, axis=0), index=subsets, name=group, dtype=np.float64
    )

    return Tie_Break_Coarser(scores, tie_tolerance), scores
