"""
Train/test orchestration and per-group model scoring
"""

import json
import os
import warnings
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd

from gazepy.analysis import Roc_Auc
from gazepy.gaze import Build_Fixation_Map, Build_Human_Saliency_Map, CohortDataset
from gazepy.itti import Saliency_SC, Select_Best_Subset, Subset_Label
from gazepy.learning import (
    Center_Weight_Surface,
    LinearModel,
    Predict_SIC,
    Train_Group_Model,
)
from gazepy.patches import Multi_Size_Patch_Map, Patch_Subset_Sizes, Select_Patch_Subset
from gazepy.utils import Config_Fingerprint, Constants, Map_In_Parallel


MODEL_IDS = ("SC", "SIC", "P", "ITTI", "PATCH", "CENTER", "CONSTANT", "HUMAN")

REPORT_NOTE = (
    "values are computed from the supplied cohort and are not reference results"
)


@dataclass
class EvalReport:
    """Scores of one predictor for one group over a test split

    per_image has one row per test image, sorted by image_id, with
    columns image_id, auc, status ("ok" or "failed") and error.
    """

    model_id: str
    group: str
    subset: str
    per_image: pd.DataFrame
    mean_auc: float
    fingerprint: dict = field(default_factory=dict)

    @property
    def aucs(self) -> np.ndarray:
        return self.per_image.loc[self.per_image["status"] == "ok", "auc"].to_numpy()

    @property
    def failed(self) -> list[str]:
        return self.per_image.loc[
            self.per_image["status"] == "failed", "image_id"
        ].tolist()


# Predictors are picklable callables (image_id, image) -> saliency map


@dataclass
class ConstantPredictor:
    value: float = 0.5
    model_id: str = "CONSTANT"
    label: str = ""

    def __call__(self, image_id: str, image: np.ndarray) -> np.ndarray:
        return np.full(image.shape[:2], self.value, dtype=np.float64)


@dataclass
class CenterPredictor:
    model_id: str = "CENTER"
    label: str = ""

    def __call__(self, image_id: str, image: np.ndarray) -> np.ndarray:
        height, width = image.shape[:2]
        return Center_Weight_Surface(width, height)


@dataclass
class HumanPredictor:
    """The group's own human saliency map, an upper bound"""

    fixation_maps: dict[str, np.ndarray]
    sigma: float = Constants.HUMAN_MAP_SIGMA
    model_id: str = "HUMAN"
    label: str = ""

    def __call__(self, image_id: str, image: np.ndarray) -> np.ndarray:
        return Build_Human_Saliency_Map(self.fixation_maps[image_id], self.sigma)


@dataclass
class SCPredictor:
    subset: int = 1
    subset_end: int = Constants.NUM_SCALES
    center_weight: float = 0.0
    model_id: str = "SC"

    @property
    def label(self) -> str:
        return Subset_Label(self.subset, self.subset_end)

    def __call__(self, image_id: str, image: np.ndarray) -> np.ndarray:
        return Saliency_SC(image, self.subset, self.center_weight, self.subset_end)


@dataclass
class SICPredictor:
    model: LinearModel
    center_weight: float | None = None
    model_id: str = "SIC"

    @property
    def label(self) -> str:
        return Subset_Label(self.model.subset, self.model.subset_end)

    def __call__(self, image_id: str, image: np.ndarray) -> np.ndarray:
        return Predict_SIC(image, self.model, self.center_weight)


@dataclass
class PatchPredictor:
    subset: int = 1
    subset_end: int = len(Constants.PATCH_SIZES)
    center_weight: float = 0.0
    dimension: int = Constants.PCA_DIMENSIONS
    model_id: str = "P"

    @property
    def label(self) -> str:
        return f"{self.subset}~{self.subset_end}"

    def __call__(self, image_id: str, image: np.ndarray) -> np.ndarray:
        return Multi_Size_Patch_Map(
            image,
            Patch_Subset_Sizes(self.subset, self.subset_end),
            self.dimension,
            self.center_weight,
        )


def Build_Predictor(
    model_id: str,
    dataset: CohortDataset | None = None,
    group: str | None = None,
    model: LinearModel | None = None,
    subset: int | None = None,
    subset_end: int | None = None,
    center_weight: float | None = None,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    dimension: int = Constants.PCA_DIMENSIONS,
):
    """Predictor for a model id

    Parameters
    ----------
    model_id : str {"SC", "SIC", "P", "ITTI", "PATCH", "CENTER", "CONSTANT", "HUMAN"}
        ITTI is SC at 1~6 with no center weight and PATCH is P over
        every patch size with no center weight.

    dataset, group :
        Required by HUMAN.

    model : LinearModel
        Required by SIC.

    subset, subset_end : int, optional
        Scale (SC) or patch-size (P) subset.

    center_weight : float, optional
        Blend weight w_k. SIC defaults to the model's fitted weight,
        the others to 0.
    """

    match model_id:
        case "SC":
            return SCPredictor(
                subset or 1, subset_end or Constants.NUM_SCALES, center_weight or 0.0
            )

        case "ITTI":
            return SCPredictor(1, Constants.NUM_SCALES, 0.0, model_id="ITTI")

        case "SIC":
            if model is None:
                raise ValueError("The SIC predictor needs a trained model")
            return SICPredictor(model, center_weight)

        case "P":
            return PatchPredictor(
                subset or 1,
                subset_end or len(Constants.PATCH_SIZES),
                center_weight or 0.0,
                dimension,
            )

        case "PATCH":
            return PatchPredictor(
                1, len(Constants.PATCH_SIZES), 0.0, dimension, model_id="PATCH"
            )

        case "CENTER":
            return CenterPredictor()

        case "CONSTANT":
            return ConstantPredictor()

        case "HUMAN":
            if dataset is None or group is None:
                raise ValueError("The HUMAN predictor needs a dataset and a group")
            return HumanPredictor(
                {
                    image_id: Build_Fixation_Map(dataset, group, image_id)
                    for image_id in dataset.image_ids
                    if dataset.has_fixations(group, image_id)
                },
                sigma,
            )

    raise ValueError(f"Unknown model id '{model_id}', expected one of {MODEL_IDS}")


def Split_Dataset(
    dataset: CohortDataset, train_count: int = Constants.TRAIN_COUNT
) -> tuple[CohortDataset, CohortDataset]:
    """First `train_count` images in manifest order train, the rest test"""

    image_ids = dataset.image_ids

    if not 0 <= train_count < len(image_ids):
        raise ValueError(
            f"train_count must lie in [0, {len(image_ids)}), got {train_count}"
        )

    return dataset.subset(image_ids[:train_count]), dataset.subset(
        image_ids[train_count:]
    )


def _Evaluate_Image(
    task: tuple[str, np.ndarray, np.ndarray], predictor, num_thresholds: int
) -> tuple[str, float, str]:

    image_id, image, fixation_map = task

    try:
        saliency_map = predictor(image_id, image)
        auc = Roc_Auc(saliency_map, fixation_map, num_thresholds).auc

    except Exception as error:
        return image_id, float("nan"), f"{type(error).__name__}: {error}"

    return image_id, auc, ""


def Evaluate_Model(
    predictor,
    dataset: CohortDataset,
    group: str,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    seed: int = 0,
    split: dict | None = None,
    processes: int | None = 1,
    verbose: bool = False,
) -> EvalReport:
    """Scores a predictor against a group's fixations on every test image

    A predictor failing on an image records that image as failed, with
    a warning. Failed images are left out of the mean, which is taken
    over the remaining images in image_id order.


    Parameters
    ----------
    predictor : Callable
        Picklable callable (image_id, image) -> saliency map with
        `model_id` and `label` attributes, see Build_Predictor.

    dataset : CohortDataset
        The test split.

    group : str
        Age group whose fixations are predicted.

    sigma : float {25}, optional
        Human map blur, recorded in the fingerprint.

    num_thresholds : int {256}, optional
        ROC threshold count.

    seed : int {0}, optional
        Recorded in the fingerprint.

    split : dict, optional
        Description of the train/test split, recorded in the
        fingerprint.


    Returns
    -------
    report : EvalReport
    """

    image_ids = sorted(
        image_id for image_id in dataset.image_ids if dataset.has_fixations(group, image_id)
    )

    if len(image_ids) == 0:
        raise ValueError(f"Group {group} has no fixations on the test images")

    tasks = [
        (image_id, dataset.images[image_id], Build_Fixation_Map(dataset, group, image_id))
        for image_id in image_ids
    ]

    results = Map_In_Parallel(
        partial(_Evaluate_Image, predictor=predictor, num_thresholds=num_thresholds),
        tasks,
        processes=processes,
        desc=f"Evaluating {predictor.model_id} ({group})",
        verbose=verbose,
    )

    per_image = pd.DataFrame(results, columns=["image_id", "auc", "error"])
    per_image.insert(2, "status", np.where(per_image["error"] == "", "ok", "failed"))

    for _, row in per_image.loc[per_image["status"] == "failed"].iterrows():
        warnings.warn(
            f"{predictor.model_id} failed on image {row['image_id']}: {row['error']}"
        )

    aucs = per_image.loc[per_image["status"] == "ok", "auc"].to_numpy()
    mean_auc = float(np.mean(aucs)) if len(aucs) > 0 else float("nan")

    fingerprint = Config_Fingerprint(
        model_id=predictor.model_id,
        group=group,
        subset=predictor.label,
        sigma=sigma,
        num_thresholds=num_thresholds,
        seed=seed,
        split=split or {},
        test_images=image_ids,
    )

    return EvalReport(
        model_id=predictor.model_id,
        group=group,
        subset=predictor.label,
        per_image=per_image,
        mean_auc=mean_auc,
        fingerprint=fingerprint,
    )


def _Groups(dataset: CohortDataset, groups) -> list[str]:
    if groups is None:
        return dataset.groups_present
    return list(groups)


def Subset_Table(
    dataset: CohortDataset,
    groups: tuple | None = None,
    subsets: tuple = tuple(range(1, Constants.NUM_SCALES + 1)),
    center_weights: dict[str, float] | None = None,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    processes: int | None = 1,
    verbose: bool = False,
) -> pd.DataFrame:
    """Mean ROC area of S+C for every group and scale subset

    Rows are groups, columns subset labels "1~6" ... "6~6".
    """

    center_weights = center_weights or {}

    rows = {}
    for group in _Groups(dataset, groups):
        _, scores = Select_Best_Subset(
            dataset,
            group,
            subsets,
            num_thresholds=num_thresholds,
            center_weight=center_weights.get(group, 0.0),
            processes=processes,
            verbose=verbose,
        )
        rows[group] = scores.to_numpy()

    return pd.DataFrame.from_dict(
        rows, orient="index", columns=[Subset_Label(subset) for subset in subsets]
    )


def Learned_Subset_Table(
    train: CohortDataset,
    test: CohortDataset,
    groups: tuple | None = None,
    subsets: tuple = tuple(range(1, Constants.NUM_SCALES + 1)),
    samples: int = Constants.SAMPLES_PER_IMAGE,
    regularization: float = Constants.REGULARIZATION,
    grid: tuple = Constants.CENTER_WEIGHT_GRID,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    seed: int = 0,
    processes: int | None = 1,
    verbose: bool = False,
) -> tuple[pd.DataFrame, dict[tuple[str, int], LinearModel]]:
    """Test-split mean ROC area of S+I+C, one model per group and subset

    Returns
    -------
    table : pandas.DataFrame
        Rows are groups, columns subset labels.

    models : dict
        (group, subset) -> trained LinearModel.
    """

    models = {}
    rows = {}

    for group in _Groups(train, groups):
        row = []
        for subset in subsets:
            model = Train_Group_Model(
                train,
                group,
                subset,
                samples=samples,
                regularization=regularization,
                grid=grid,
                sigma=sigma,
                num_thresholds=num_thresholds,
                seed=seed,
                processes=processes,
                verbose=verbose,
            )
            models[(group, subset)] = model

            report = Evaluate_Model(
                SICPredictor(model),
                test,
                group,
                sigma,
                num_thresholds,
                seed,
                processes=processes,
                verbose=verbose,
            )
            row.append(report.mean_auc)

        rows[group] = row

    table = pd.DataFrame.from_dict(
        rows, orient="index", columns=[Subset_Label(subset) for subset in subsets]
    )

    return table, models


def Patch_Subset_Table(
    dataset: CohortDataset,
    groups: tuple | None = None,
    subsets: tuple = tuple(range(1, len(Constants.PATCH_SIZES) + 1)),
    dimension: int = Constants.PCA_DIMENSIONS,
    center_weights: dict[str, float] | None = None,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    processes: int | None = 1,
    verbose: bool = False,
) -> pd.DataFrame:
    """Mean ROC area of P for every group and patch-size subset

    Rows are groups, columns "1~4" ... "4~4".
    """

    center_weights = center_weights or {}
    last = len(Constants.PATCH_SIZES)

    rows = {}
    for group in _Groups(dataset, groups):
        _, scores = Select_Patch_Subset(
            dataset,
            group,
            subsets,
            dimension,
            num_thresholds=num_thresholds,
            center_weight=center_weights.get(group, 0.0),
            processes=processes,
            verbose=verbose,
        )
        rows[group] = scores.to_numpy()

    return pd.DataFrame.from_dict(
        rows, orient="index", columns=[f"{subset}~{last}" for subset in subsets]
    )


COMPARISON_COLUMNS = {
    "SIC": "S+I+C",
    "P": "P",
    "ITTI": "Itti",
    "PATCH": "Patch",
    "HUMAN": "Human",
}


def Comparison_Table(
    train: CohortDataset,
    test: CohortDataset,
    groups: tuple | None = None,
    scale_subsets: dict[str, int] | None = None,
    patch_subsets: dict[str, int] | None = None,
    samples: int = Constants.SAMPLES_PER_IMAGE,
    regularization: float = Constants.REGULARIZATION,
    grid: tuple = Constants.CENTER_WEIGHT_GRID,
    dimension: int = Constants.PCA_DIMENSIONS,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
    num_thresholds: int = Constants.NUM_THRESHOLDS,
    seed: int = 0,
    processes: int | None = 1,
    verbose: bool = False,
) -> tuple[pd.DataFrame, list[EvalReport]]:
    """Age-adapted models against the non-adapted baselines

    Subsets not given are selected per group on the training split. P
    uses the center weight fitted for the group's S+I+C model. Columns
    are S+I+C, P, Itti, Patch and the Human upper bound; every score is
    a test-split mean ROC area.
    """

    scale_subsets = scale_subsets or {}
    patch_subsets = patch_subsets or {}

    reports = []
    rows = {}

    for group in _Groups(train, groups):

        if group in scale_subsets:
            scale_subset = scale_subsets[group]
        else:
            scale_subset, _ = Select_Best_Subset(
                train, group, num_thresholds=num_thresholds, processes=processes
            )

        if group in patch_subsets:
            patch_subset = patch_subsets[group]
        else:
            patch_subset, _ = Select_Patch_Subset(
                train, group, dimension=dimension, num_thresholds=num_thresholds,
                processes=processes,
            )

        model = Train_Group_Model(
            train,
            group,
            scale_subset,
            samples=samples,
            regularization=regularization,
            grid=grid,
            sigma=sigma,
            num_thresholds=num_thresholds,
            seed=seed,
            processes=processes,
            verbose=verbose,
        )

        predictors = [
            SICPredictor(model),
            PatchPredictor(
                patch_subset, center_weight=model.center_weight, dimension=dimension
            ),
            Build_Predictor("ITTI"),
            Build_Predictor("PATCH", dimension=dimension),
            Build_Predictor("HUMAN", test, group, sigma=sigma),
        ]

        row = {}
        for predictor in predictors:
            report = Evaluate_Model(
                predictor,
                test,
                group,
                sigma,
                num_thresholds,
                seed,
                processes=processes,
                verbose=verbose,
            )
            reports.append(report)
            row[COMPARISON_COLUMNS[predictor.model_id]] = report.mean_auc

        rows[group] = row

    return pd.DataFrame.from_dict(rows, orient="index"), reports


def Write_Report_Csv(
    table: pd.DataFrame, path: str, fingerprint: dict, index: bool = True
) -> None:
    """CSV preceded by a fingerprint comment line and a note line"""

    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(f"# fingerprint: {json.dumps(fingerprint, sort_keys=True)}\n")
        file.write(f"# note: {REPORT_NOTE}\n")
        table.to_csv(file, index=index, lineterminator="\n")


def Read_Report_Csv(path: str, index_col: int | None = 0) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", index_col=index_col)


def Eval_Summary(reports: list[EvalReport]) -> pd.DataFrame:
    """One row per report: model, group, subset, mean ROC area and counts"""

    return pd.DataFrame(
        [
            {
                "model_id": report.model_id,
                "group": report.group,
                "subset": report.subset,
                "mean_auc": report.mean_auc,
                "images": len(report.per_image),
                "failed": len(report.failed),
            }
            for report in reports
        ]
    )


def Write_Eval_Report(report: EvalReport, directory: str) -> tuple[str, str]:
    """Per-image and summary CSVs of an EvalReport

    Returns
    -------
    per_image_path, summary_path : str
    """

    os.makedirs(directory, exist_ok=True)
    stem = f"{report.model_id}_{report.group}"

    per_image_path = os.path.join(directory, f"{stem}_per_image.csv")
    summary_path = os.path.join(directory, f"{stem}_summary.csv")

    Write_Report_Csv(report.per_image, per_image_path, report.fingerprint, index=False)
    Write_Report_Csv(
        Eval_Summary([report]), summary_path, report.fingerprint, index=False
    )

    return per_image_path, summary_path


def Format_Table(table: pd.DataFrame) -> str:
    """Pretty-printed text table, four decimals"""

    return table.to_string(float_format=lambda value: f"{value:.4f}")
