"""
Learned linear combination of conspicuity maps with an age-adapted
center bias
"""

import os
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd

from gazepy.gaze import Build_Fixation_Map, Build_Human_Saliency_Map, CohortDataset
from gazepy.raster import Check_Raster, Normalize_Raster, Resize_Bilinear
from gazepy.utils import Constants, Map_In_Parallel


CHANNELS = ("intensity", "color", "orientation")
MODEL_FILE_HEADER = "gazepy-linear-model"


@dataclass
class LinearModel:
    """Per-group linear saliency model

    Predicts S = weights . (I, C, O) + bias over the conspicuity maps of
    scales subset..subset_end, then blends with the center surface by
    `center_weight`.
    """

    group: str
    weights: np.ndarray
    bias: float
    subset: int = 1
    subset_end: int = Constants.NUM_SCALES
    center_weight: float = 0.0
    regularization: float = Constants.REGULARIZATION
    training_accuracy: float = float("nan")
    objective_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = float(self.bias)

        if self.weights.shape != (len(CHANNELS),):
            raise ValueError(
                f"A linear model needs {len(CHANNELS)} channel weights, "
                + f"got shape {self.weights.shape}"
            )

        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("Linear model parameters must be finite")


def Center_Weight_Surface(width: int, height: int) -> np.ndarray:
    """1 - d / D, where d is the distance to the image center and D the
    center-to-corner distance

    A single pixel raster is all ones.
    """

    if width < 1 or height < 1:
        raise ValueError(f"Surface dimensions must be >= 1, got {width}x{height}")

    y, x = np.mgrid[0:height, 0:width].astype(np.float64)

    return Center_Weight_At(x, y, width, height)


def Center_Weight_At(x, y, width: int, height: int):
    """Center weight at (possibly fractional) pixel coordinates"""

    center_x = (width - 1) / 2
    center_y = (height - 1) / 2
    corner_distance = np.hypot(center_x, center_y)

    distance = np.hypot(np.asarray(x) - center_x, np.asarray(y) - center_y)

    if corner_distance == 0:
        return np.ones_like(distance, dtype=np.float64)

    return np.clip(1 - distance / corner_distance, 0, 1)


def Blend_Center_Weight(saliency_map: np.ndarray, center_weight: float) -> np.ndarray:
    """Convex blend (1 - w) S + w C with the center surface"""

    saliency_map = Check_Raster(saliency_map)

    if not 0 <= center_weight <= 1:
        raise ValueError(f"Center weight must lie in [0, 1], got {center_weight}")

    height, width = saliency_map.shape

    return (1 - center_weight) * saliency_map + center_weight * Center_Weight_Surface(
        width, height
    )


def Conspicuity_At_Size(conspicuity, width: int, height: int) -> np.ndarray:
    """(3, height, width) stack of the conspicuity maps, bilinearly resized"""

    return np.stack(
        [
            Resize_Bilinear(channel, width, height)
            for channel in [
                conspicuity.intensity,
                conspicuity.color,
                conspicuity.orientation,
            ]
        ]
    )


def Extract_Training_Samples(
    human_saliency_map: np.ndarray,
    conspicuity,
    samples: int = Constants.SAMPLES_PER_IMAGE,
) -> pd.DataFrame:
    """Strongest positive and negative pixels of a human saliency map

    Pixels are ranked by descending saliency with ties broken by
    row-major index. The first `samples` are positives and the last
    `samples` negatives.


    Parameters
    ----------
    human_saliency_map : numpy.ndarray
        Human saliency map of one group on one image.

    conspicuity : ConspicuityMaps
        Conspicuity maps of the same image.

    samples : int {10}, optional
        Positives (and negatives) per image.


    Returns
    -------
    samples : pandas.DataFrame
        Columns intensity, color, orientation, label, pixel. Positives
        first.
    """

    human_saliency_map = Check_Raster(human_saliency_map)
    height, width = human_saliency_map.shape

    if samples < 1:
        raise ValueError(f"Sample count must be >= 1, got {samples}")

    if 2 * samples > human_saliency_map.size:
        raise ValueError(
            f"{samples} positives and negatives need {2 * samples} pixels, "
            + f"map has {human_saliency_map.size}"
        )

    values = human_saliency_map.ravel()
    indices = np.arange(values.size)
    order = np.lexsort((indices, -values))

    pixels = np.concatenate([order[:samples], order[-samples:]])
    labels = np.concatenate([np.ones(samples), -np.ones(samples)]).astype(np.int64)

    features = Conspicuity_At_Size(conspicuity, width, height).reshape(len(CHANNELS), -1)

    table = pd.DataFrame(
        {channel: features[i, pixels] for i, channel in enumerate(CHANNELS)}
    )
    table["label"] = labels
    table["pixel"] = pixels

    return table


def _Primal_Objective(
    weights: np.ndarray, features: np.ndarray, labels: np.ndarray, regularization: float
) -> float:
    margins = labels * (features @ weights)
    return float(
        regularization * weights @ weights + np.mean(np.maximum(0, 1 - margins))
    )


def Train_Linear_Model(
    samples: pd.DataFrame,
    regularization: float = Constants.REGULARIZATION,
    epochs: int = Constants.SOLVER_EPOCHS,
    tolerance: float = Constants.SOLVER_TOLERANCE,
    seed: int = 0,
    group: str = "",
    subset: int = 1,
    subset_end: int = Constants.NUM_SCALES,
) -> LinearModel:
    """Hinge-loss linear classifier over conspicuity features

    Minimises lambda |w|^2 + mean(max(0, 1 - y (w . x + b))) by dual
    coordinate descent. The bias is learned as the weight of a constant
    feature. The iterate with the lowest objective is returned.
    `objective_trace` holds the objective of every epoch's iterate and
    `objective_history` the best objective so far, which never increases.


    Parameters
    ----------
    samples : pandas.DataFrame
        Columns intensity, color, orientation and label (+1 / -1).

    regularization : float {1e-2}, optional
        lambda, must be positive.

    epochs : int, optional
        Maximum passes over the samples.

    tolerance : float, optional
        Stop once the projected gradient spread falls below this.

    seed : int {0}, optional
        Seeds the per-epoch visiting order.


    Returns
    -------
    model : LinearModel
    """

    if not regularization > 0:
        raise ValueError(f"Regularization must be positive, got {regularization}")

    labels = samples["label"].to_numpy(dtype=np.float64)

    if not np.all(np.isin(labels, [-1, 1])):
        raise ValueError("Sample labels must be +1 or -1")

    if not (np.any(labels == 1) and np.any(labels == -1)):
        raise ValueError("Training needs samples of both labels")

    features = samples[list(CHANNELS)].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise ValueError("Sample features must be finite")

    count = len(labels)
    augmented = np.hstack([features, np.ones((count, 1))])

    cost = 1 / (2 * regularization * count)
    diagonal = np.einsum("ij,ij->i", augmented, augmented)

    rng = np.random.default_rng(seed)

    alpha = np.zeros(count)
    weights = np.zeros(augmented.shape[1])

    best_weights = weights.copy()
    best_objective = _Primal_Objective(weights, augmented, labels, regularization)
    history = [best_objective]
    trace = [best_objective]

    for _ in range(epochs):

        largest = -np.inf
        smallest = np.inf

        for i in rng.permutation(count):

            gradient = labels[i] * (augmented[i] @ weights) - 1

            if alpha[i] == 0:
                projected = min(gradient, 0)
            elif alpha[i] == cost:
                projected = max(gradient, 0)
            else:
                projected = gradient

            largest = max(largest, projected)
            smallest = min(smallest, projected)

            if projected != 0:
                previous = alpha[i]
                alpha[i] = min(max(previous - gradient / diagonal[i], 0), cost)
                weights += (alpha[i] - previous) * labels[i] * augmented[i]

        objective = _Primal_Objective(weights, augmented, labels, regularization)
        if objective < best_objective:
            best_objective = objective
            best_weights = weights.copy()

        history.append(best_objective)
        trace.append(objective)

        if largest - smallest < tolerance:
            break

    predictions = np.where(augmented @ best_weights >= 0, 1, -1)

    return LinearModel(
        group=group,
        weights=best_weights[:-1],
        bias=best_weights[-1],
        subset=subset,
        subset_end=subset_end,
        regularization=regularization,
        training_accuracy=float(np.mean(predictions == labels)),
        objective_history=np.array(history),
        objective_trace=np.array(trace),
    )


def Save_Linear_Model(model: LinearModel, path: str) -> None:
    """Writes a model as versioned 'key value' lines

    Floats are written with repr so loading restores them bit-exactly.
    """

    lines = [
        f"{MODEL_FILE_HEADER} {Constants.MODEL_FILE_VERSION}",
        f"group {model.group}",
        f"subset {model.subset}",
        f"subset_end {model.subset_end}",
    ]
    lines += [
        f"weight_{channel} {float(weight)!r}"
        for channel, weight in zip(CHANNELS, model.weights)
    ]
    lines += [
        f"bias {model.bias!r}",
        f"center_weight {float(model.center_weight)!r}",
        f"regularization {float(model.regularization)!r}",
        f"training_accuracy {float(model.training_accuracy)!r}",
    ]

    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write("\n".join(lines) + "\n")


def Load_Linear_Model(path: str) -> LinearModel:

    if not os.path.isfile(path):
        raise FileNotFoundError(f"Model file not found: {path}")

    with open(path, encoding="utf-8") as file:
        lines = [line.strip() for line in file if line.strip() != ""]

    if len(lines) == 0:
        raise ValueError(f"Model file {path} is empty")

    header = lines[0].split()
    if len(header) != 2 or header[0] != MODEL_FILE_HEADER:
        raise ValueError(f"{path} is not a gazepy model file")

    if header[1] != str(Constants.MODEL_FILE_VERSION):
        raise ValueError(
            f"Model file {path} has version {header[1]}, "
            + f"expected {Constants.MODEL_FILE_VERSION}"
        )

    entries = {}
    for number, line in enumerate(lines[1:], start=2):
        key, _, value = line.partition(" ")
        if value == "":
            raise ValueError(f"Model file {path}, line {number}: no value for '{key}'")
        entries[key] = value

    required = (
        ["group", "subset", "subset_end", "bias", "center_weight", "regularization"]
        + [f"weight_{channel}" for channel in CHANNELS]
    )
    missing = [key for key in required if key not in entries]
    if missing:
        raise ValueError(f"Model file {path} is missing {missing}")

    try:
        return LinearModel(
            group=entries["group"],
            weights=[float(entries[f"weight_{channel}"]) for channel in CHANNELS],
            bias=float(entries["bias"]),
            subset=int(entries["subset"]),
            subset_end=int(entries["subset_end"]),
            center_weight=float(entries["center_weight"]),
            regularization=float(entries["regularization"]),
            training_accuracy=float(entries.get("training_accuracy", "nan")),
        )
    except ValueError as error:
        raise ValueError(f"Model file {path} does not parse: {error}")


def Sic_Base_Map(conspicuity, model: LinearModel, width: int, height: int) -> np.ndarray:
    """Normalised linear model response before the center blend"""

    stack = Conspicuity_At_Size(conspicuity, width, height)

    response = model.weights[0] * stack[0]
    for weight, channel in zip(model.weights[1:], stack[1:]):
        response = response + weight * channel

    return Normalize_Raster(response + model.bias)


def Predict_SIC(
    image: np.ndarray,
    model: LinearModel,
    center_weight: float | None = None,
    features=None,
    conspicuity=None,
) -> np.ndarray:
    """Learned-combination saliency with an age-adapted center bias

    Parameters
    ----------
    image : numpy.ndarray
        Colour image (h, w, 3) in [0, 1].

    model : LinearModel
        Trained group model.

    center_weight : float, optional
        Blend weight, defaults to the model's fitted weight.

    features : FeatureMaps, optional
        Precomputed features for `image`.

    conspicuity : ConspicuityMaps, optional
        Precomputed conspicuity maps at the model's subset.


    Returns
    -------
    saliency : numpy.ndarray
        Map at the image resolution.
    """

    from gazepy.itti import Combine_Conspicuity, Extract_Feature_Maps

    if center_weight is None:
        center_weight = model.center_weight

    if conspicuity is None:
        if features is None:
            features = Extract_Feature_Maps(image)
        conspicuity = Combine_Conspicuity(features, model.subset, model.subset_end)

    height, width = np.shape(image)[:2]

    return Blend_Center_Weight(
        Sic_Base_Map(conspicuity, model, width, height), center_weight
    )


def _Image_Samples(
    task: tuple[str, np.ndarray, np.ndarray],
    subset: int,
    subset_end: int,
    samples: int,
    sigma: float,
) -> pd.DataFrame:

    from gazepy.itti import Combine_Conspicuity, Extract_Feature_Maps

    image_id, image, fixation_map = task

    conspicuity = Combine_Conspicuity(Extract_Feature_Maps(image), subset, subset_end)
    table = Extract_Training_Samples(
        Build_Human_Saliency_Map(fixation_map, sigma), conspicuity, samples
    )
    table["image_id"] = image_id

    return table


def Extract_Group_Samples(
    dataset: CohortDataset,
    group: str,
    subset: int = 1,
    subset_end: int = Constants.NUM_SCALES,
    samples: int = Constants.SAMPLES_PER_IMAGE,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    processes: int | None = 1,
    verbose: bool = False,
) -> pd.DataFrame:
    """Training samples of a group pooled over every image it viewed"""

    tasks = [
        (image_id, dataset.images[image_id], Build_Fixation_Map(dataset, group, image_id))
        for image_id in dataset.image_ids
        if dataset.has_fixations(group, image_id)
    ]

    if len(tasks) == 0:
        raise ValueError(f"Group {group} has no fixations to sample")

    tables = Map_In_Parallel(
        partial(
            _Image_Samples,
            subset=subset,
            subset_end=subset_end,
            samples=samples,
            sigma=sigma,
        ),
        tasks,
        processes=processes,
        desc=f"Extracting samples ({group})",
        verbose=verbose,
    )

    pooled = pd.concat(tables, ignore_index=True)
    pooled["group"] = group

    return pooled


def _Image_Center_Weight_Aucs(
    task: tuple[np.ndarray, np.ndarray],
    model: LinearModel,
    grid: tuple,
    num_thresholds: int,
) -> list[float]:

    from gazepy.analysis import Roc_Auc
    from gazepy.itti import Combine_Conspicuity, Extract_Feature_Maps

    image, fixation_map = task
    height, width = image.shape[:2]

    conspicuity = Combine_Conspicuity(
        Extract_Feature_Maps(image), model.subset, model.subset_end
    )
    base_map = Sic_Base_Map(conspicuity, model, width, height)

    return [
        Roc_Auc(Blend_Center_Weight(base_map, weight), fixation_map, num_thresholds).auc
        for weight in grid
    ]


def Fit_Group_Center_Weight(
    dataset: CohortDataset,
    group: str,
    model: LinearModel,
    grid: tuple = Constants.CENTER_WEIGHT_GRID,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    tie_tolerance: float = 0.0,
    processes: int | None = 1,
    verbose: bool = False,
) -> tuple[float, pd.Series]:
    """Center weight maximising a group's mean ROC area

    Weights within `tie_tolerance` of the best score count as tied, and
    the smallest tied weight wins.


    Returns
    -------
    center_weight : float

    scores : pandas.Series
        Mean ROC area per grid value.
    """

    grid = tuple(float(weight) for weight in grid)
    if len(grid) == 0:
        raise ValueError("Center weight grid is empty")

    tasks = [
        (dataset.images[image_id], Build_Fixation_Map(dataset, group, image_id))
        for image_id in dataset.image_ids
        if dataset.has_fixations(group, image_id)
    ]

    if len(tasks) == 0:
        raise ValueError(f"Group {group} has no fixations to fit against")

    image_aucs = Map_In_Parallel(
        partial(
            _Image_Center_Weight_Aucs,
            model=model,
            grid=grid,
            num_thresholds=num_thresholds,
        ),
        tasks,
        processes=processes,
        desc=f"Fitting center weight ({group})",
        verbose=verbose,
    )

    scores = pd.Series(np.mean(image_aucs, axis=0), index=grid, name=group)

    best = scores.max()
    tied = [weight for weight, value in scores.items() if value >= best - tie_tolerance]

    return min(tied), scores


def Train_Group_Model(
    dataset: CohortDataset,
    group: str,
    subset: int = 1,
    subset_end: int = Constants.NUM_SCALES,
    samples: int = Constants.SAMPLES_PER_IMAGE,
    regularization: float = Constants.REGULARIZATION,
    grid: tuple = Constants.CENTER_WEIGHT_GRID,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    seed: int = 0,
    processes: int | None = 1,
    verbose: bool = False,
) -> LinearModel:
    """Samples, trains and fits the center weight of a group model

    `dataset` should be the training split only.
    """

    pooled = Extract_Group_Samples(
        dataset, group, subset, subset_end, samples, sigma, processes, verbose
    )

    model = Train_Linear_Model(
        pooled,
        regularization,
        seed=seed,
        group=group,
        subset=subset,
        subset_end=subset_end,
    )

    model.center_weight, _ = Fit_Group_Center_Weight(
        dataset, group, model, grid, num_thresholds, processes=processes, verbose=verbose
    )

    if verbose:
        print(
            f"{group}: weights {np.round(model.weights, 4)}, bias {model.bias:.4f}, "
            + f"center weight {model.center_weight}, "
            + f"training accuracy {model.training_accuracy:.3f}"
        )

    return model
