"""
Fixation-behaviour analyses: explorativeness entropy, ROC agreement
between age groups and center-bias scoring
"""

import warnings
from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd
import scipy.integrate
import scipy.stats

from gazepy.gaze import Build_Fixation_Map, Build_Human_Saliency_Map, CohortDataset
from gazepy.raster import Check_Raster, Normalize_Raster, Resize_Bilinear
from gazepy.utils import Constants, Map_In_Parallel


@dataclass
class RocResult:
    """ROC curve as (fpr, tpr) rows sorted by fpr, plus its area"""

    points: np.ndarray
    auc: float

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass
class ExplorativenessReport:
    per_image: pd.DataFrame
    group_means: pd.Series
    spearman_rho: float
    pearson_r: float


@dataclass
class AgreementMatrix:
    """Mean ROC agreement, rows are source groups, columns target groups"""

    scores: pd.DataFrame
    image_counts: pd.DataFrame


@dataclass
class CenterMap:
    group: str
    map: np.ndarray


def Entropy(saliency_map: np.ndarray, num_bins: int = Constants.NUM_BINS) -> float:
    """First-order entropy of a saliency map, in bits

    Values are histogrammed into `num_bins` equal-width bins over
    [0, 1] and the Shannon entropy of the bin frequencies is returned.


    Parameters
    ----------
    saliency_map : numpy.ndarray
        Map with values in [0, 1].

    num_bins : int {256}, optional
        Histogram bin count, at least 2.


    Returns
    -------
    entropy : float
        Between 0 and log2(num_bins).
    """

    saliency_map = Check_Raster(saliency_map)

    if num_bins < 2:
        raise ValueError(f"num_bins must be >= 2, got {num_bins}")

    if saliency_map.min() < -1e-9 or saliency_map.max() > 1 + 1e-9:
        raise ValueError("Entropy expects map values in [0, 1]")

    counts, _ = np.histogram(
        np.clip(saliency_map, 0, 1), bins=num_bins, range=(0, 1)
    )

    return float(scipy.stats.entropy(counts, base=2))


def Roc_Auc(
    source_saliency: np.ndarray,
    target_fixations: np.ndarray,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    exact: bool = False,
    literal_fpr: bool = False,
    negative_samples: int | None = None,
    seed: int = 0,
) -> RocResult:
    """ROC agreement between a saliency map and a set of fixated pixels

    The map is range-normalised, then thresholded at `num_thresholds`
    evenly spaced levels in [0, 1] (or at every distinct map value when
    `exact`). A pixel is predicted salient when its value is >= the
    threshold. TPR is the share of fixated pixels predicted salient and
    FPR the share of the remaining pixels. The curve is closed with
    (0, 0) and (1, 1) and integrated with the trapezoid rule.


    Parameters
    ----------
    source_saliency : numpy.ndarray
        Saliency map.

    target_fixations : numpy.ndarray
        Raster of the same shape, non-zero at fixated pixels.

    num_thresholds : int {256}, optional
        Number of threshold levels when not `exact`.

    exact : bool {False, True}, optional
        Use every distinct map value as a threshold.

    literal_fpr : bool {False, True}, optional
        Divide false positives by the number of fixated pixels rather
        than by the number of non-fixated pixels. Audit only: the
        resulting curve is not bounded by 1 and is not closed at (1, 1).

    negative_samples : int | None, optional
        Evaluate against this many uniformly sampled non-fixated pixels.

    seed : int {0}, optional
        Seed for negative sampling.


    Returns
    -------
    result : RocResult


    Raises
    ------
    ValueError
        If no pixel is fixated, or every pixel is.
    """

    saliency = Normalize_Raster(source_saliency)
    fixated = np.asarray(target_fixations) != 0

    if fixated.shape != saliency.shape:
        raise ValueError(
            f"Fixation raster {fixated.shape} does not match saliency {saliency.shape}"
        )

    positives = saliency[fixated]
    negatives = saliency[~fixated]

    if positives.size == 0:
        raise ValueError("Degenerate ROC input: no fixated pixels")

    if negatives.size == 0:
        raise ValueError("Degenerate ROC input: every pixel is fixated")

    if negative_samples is not None and negative_samples < negatives.size:
        rng = np.random.default_rng(seed)
        negatives = rng.choice(negatives, size=negative_samples, replace=False)

    if exact:
        thresholds = np.unique(np.concatenate([positives, negatives]))
    else:
        if num_thresholds < 2:
            raise ValueError(f"num_thresholds must be >= 2, got {num_thresholds}")
        thresholds = np.linspace(0, 1, num_thresholds)

    # Descending thresholds give non-decreasing rates
    thresholds = thresholds[::-1]

    true_positives = positives.size - np.searchsorted(
        np.sort(positives), thresholds, side="left"
    )
    false_positives = negatives.size - np.searchsorted(
        np.sort(negatives), thresholds, side="left"
    )

    tpr = true_positives / positives.size

    if literal_fpr:
        fpr = false_positives / positives.size
        fpr = np.concatenate([[0.0], fpr])
        tpr = np.concatenate([[0.0], tpr])

    else:
        fpr = false_positives / negatives.size
        fpr = np.concatenate([[0.0], fpr, [1.0]])
        tpr = np.concatenate([[0.0], tpr, [1.0]])

    auc = float(scipy.integrate.trapezoid(tpr, fpr))

    return RocResult(points=np.column_stack([fpr, tpr]), auc=auc)


def _Map_Entropy(fixation_map: np.ndarray, sigma: float, num_bins: int) -> float:
    return Entropy(Build_Human_Saliency_Map(fixation_map, sigma), num_bins)


def Explorativeness_Report(
    dataset: CohortDataset,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_bins: int = Constants.NUM_BINS,
    processes: int | None = 1,
    verbose: bool = False,
) -> ExplorativenessReport:
    """Per-image and per-group entropy of human saliency maps

    Groups without any fixations are skipped with a warning, as are
    images a group did not view.


    Returns
    -------
    report : ExplorativenessReport
        per_image has columns group, image_id, entropy. The rank and
        linear correlations are between age order (Y4 < Y6 < Y8 <
        ADULT) and group mean entropy, NaN when undefined.
    """

    tasks = []
    for group in Constants.AGE_GROUPS:

        if group not in dataset.groups_present:
            warnings.warn(f"Group {group} has no fixations, skipped.")
            continue

        for image_id in dataset.image_ids:

            if not dataset.has_fixations(group, image_id):
                warnings.warn(f"Group {group} has no fixations on {image_id}, skipped.")
                continue

            tasks.append((group, image_id))

    fixation_maps = [
        Build_Fixation_Map(dataset, group, image_id) for group, image_id in tasks
    ]

    entropies = Map_In_Parallel(
        partial(_Map_Entropy, sigma=sigma, num_bins=num_bins),
        fixation_maps,
        processes=processes,
        desc="Computing entropy",
        verbose=verbose,
    )

    per_image = pd.DataFrame(
        {
            "group": [group for group, _ in tasks],
            "image_id": [image_id for _, image_id in tasks],
            "entropy": entropies,
        }
    )

    group_means = per_image.groupby("group", sort=False)["entropy"].mean()
    group_means = group_means.reindex(
        [group for group in Constants.AGE_GROUPS if group in group_means.index]
    )

    spearman_rho, pearson_r = _Age_Correlations(group_means)

    return ExplorativenessReport(
        per_image=per_image,
        group_means=group_means,
        spearman_rho=spearman_rho,
        pearson_r=pearson_r,
    )


def _Age_Correlations(values: pd.Series) -> tuple[float, float]:
    """Spearman and Pearson correlation of per-group values with age order"""

    if len(values) < 2 or np.ptp(values.to_numpy()) == 0:
        return float("nan"), float("nan")

    ordinals = [Constants.AGE_ORDINAL(group) for group in values.index]

    spearman_rho = scipy.stats.spearmanr(ordinals, values.to_numpy())[0]
    pearson_r = scipy.stats.pearsonr(ordinals, values.to_numpy())[0]

    return float(spearman_rho), float(pearson_r)


def Least_Explored_Images(
    report: ExplorativenessReport, group: str, count: int = 12
) -> pd.DataFrame:
    """The images a group explored least, lowest entropy first"""

    rows = report.per_image.loc[report.per_image["group"] == group]

    return rows.sort_values(["entropy", "image_id"], kind="stable").head(count)


def _Image_Agreement(
    fixation_maps: dict[str, np.ndarray], sigma: float, num_thresholds: int
) -> dict[tuple[str, str], float]:

    saliency_maps = {
        group: Build_Human_Saliency_Map(fixation_map, sigma)
        for group, fixation_map in fixation_maps.items()
    }

    return {
        (source, target): Roc_Auc(
            saliency_maps[source], fixation_maps[target], num_thresholds
        ).auc
        for source in fixation_maps
        for target in fixation_maps
    }


def Agreement_Matrix(
    dataset: CohortDataset,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    processes: int | None = 1,
    verbose: bool = False,
) -> AgreementMatrix:
    """Intra- and inter-group agreement scores

    Entry (source, target) is the mean over images of the ROC area of
    the source group's human saliency map against the pooled fixations
    of the target group. Images a group did not view are left out of
    that group's row and column, with a warning.
    """

    groups = dataset.groups_present
    missing = [group for group in Constants.AGE_GROUPS if group not in groups]
    if missing:
        warnings.warn(f"Agreement matrix computed without groups {missing}.")

    tasks = []
    for image_id in dataset.image_ids:

        viewing = [
            group for group in groups if dataset.has_fixations(group, image_id)
        ]

        if len(viewing) < len(groups):
            warnings.warn(
                f"Image {image_id} lacks fixations from "
                + f"{sorted(set(groups) - set(viewing))}, excluded from their entries."
            )

        tasks.append(
            {group: Build_Fixation_Map(dataset, group, image_id) for group in viewing}
        )

    image_scores = Map_In_Parallel(
        partial(_Image_Agreement, sigma=sigma, num_thresholds=num_thresholds),
        tasks,
        processes=processes,
        desc="Computing agreement",
        verbose=verbose,
    )

    scores = pd.DataFrame(np.nan, index=groups, columns=groups)
    counts = pd.DataFrame(0, index=groups, columns=groups)

    for source in groups:
        for target in groups:
            cell = [
                result[(source, target)]
                for result in image_scores
                if (source, target) in result
            ]

            counts.loc[source, target] = len(cell)
            if len(cell) > 0:
                scores.loc[source, target] = np.mean(cell)

    scores.index.name = "source"
    scores.columns.name = "target"

    return AgreementMatrix(scores=scores, image_counts=counts)


def Intra_Group_Trend(matrix: AgreementMatrix) -> tuple[pd.Series, float, float]:
    """Diagonal of an agreement matrix and its correlation with age

    Returns
    -------
    intra : pandas.Series
        Intra-group scores in age order.

    spearman_rho, pearson_r : float
    """

    intra = pd.Series(
        np.diag(matrix.scores.to_numpy()), index=matrix.scores.index, name="intra"
    )

    spearman_rho, pearson_r = _Age_Correlations(intra)

    return intra, spearman_rho, pearson_r


def Build_Center_Map(
    dataset: CohortDataset, group: str, sigma: float = Constants.HUMAN_MAP_SIGMA
) -> CenterMap:
    """Average human saliency map of a group over every image it viewed

    Maps are resized to the first image's dimensions before averaging.
    """

    width, height = dataset.image_size(dataset.image_ids[0])

    maps = [
        Resize_Bilinear(
            Build_Human_Saliency_Map(Build_Fixation_Map(dataset, group, image_id), sigma),
            width,
            height,
        )
        for image_id in dataset.image_ids
        if dataset.has_fixations(group, image_id)
    ]

    if len(maps) == 0:
        raise ValueError(f"Group {group} has no fixations")

    return CenterMap(group=group, map=Normalize_Raster(np.mean(maps, axis=0)))


def Center_Bias_Scores(
    dataset: CohortDataset,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
) -> pd.Series:
    """Mean ROC area of each group's center map against its fixations"""

    scores = {}
    for group in dataset.groups_present:

        center_map = Build_Center_Map(dataset, group, sigma).map

        aucs = []
        for image_id in dataset.image_ids:

            if not dataset.has_fixations(group, image_id):
                continue

            width, height = dataset.image_size(image_id)
            aucs.append(
                Roc_Auc(
                    Resize_Bilinear(center_map, width, height),
                    Build_Fixation_Map(dataset, group, image_id),
                    num_thresholds,
                ).auc
            )

        scores[group] = np.mean(aucs)

    return pd.Series(scores, name="center_bias")
