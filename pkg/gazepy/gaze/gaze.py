"""
Functions for loading cohort datasets and building human fixation and
human saliency maps
"""

import io
import json
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from PIL import Image

from gazepy.raster import Check_Color_Image, Gaussian_Blur, Normalize_Raster
from gazepy.utils import Constants


FIXATION_COLUMNS = ["observer_id", "group", "image_id", "x", "y", "ordinal"]


@dataclass
class CohortDataset:
    """Stimulus images plus the fixations recorded on them

    `images` maps image_id to a colour image and keeps manifest order.
    `fixations` is a DataFrame with columns observer_id, group,
    image_id, x, y, ordinal.
    """

    images: dict[str, np.ndarray]
    fixations: pd.DataFrame

    @property
    def image_ids(self) -> list[str]:
        return list(self.images)

    @property
    def groups_present(self) -> list[str]:
        present = set(self.fixations["group"].unique())
        return [group for group in Constants.AGE_GROUPS if group in present]

    def image_size(self, image_id: str) -> tuple[int, int]:
        """(width, height) of an image"""
        height, width = self.images[image_id].shape[:2]
        return width, height

    def fixations_for(self, group: str, image_id: str) -> pd.DataFrame:
        selection = (self.fixations["group"] == group) & (
            self.fixations["image_id"] == image_id
        )
        return self.fixations.loc[selection]

    def has_fixations(self, group: str, image_id: str) -> bool:
        return not self.fixations_for(group, image_id).empty

    def subset(self, image_ids: list[str]) -> "CohortDataset":
        """A dataset restricted to the given images, in the given order"""
        for image_id in image_ids:
            if image_id not in self.images:
                raise ValueError(f"Unknown image_id: {image_id}")

        fixations = self.fixations.loc[self.fixations["image_id"].isin(image_ids)]

        return CohortDataset(
            images={image_id: self.images[image_id] for image_id in image_ids},
            fixations=fixations.reset_index(drop=True),
        )


@dataclass
class HumanMaps:
    fixation_map: np.ndarray
    saliency_map: np.ndarray


def Load_Image(path: str) -> np.ndarray:
    """Loads an 8-bit RGB image (PNG or PPM) as floats in [0, 1]"""

    if not os.path.isfile(path):
        raise FileNotFoundError(f"Image file not found: {path}")

    with Image.open(path) as image:
        pixels = np.asarray(image.convert("RGB"), dtype=np.float64)

    return pixels / 255


def Save_Image(image: np.ndarray, path: str) -> None:
    """Writes a colour image as an 8-bit RGB PNG"""

    image = Check_Color_Image(image)
    pixels = np.round(image * 255).astype(np.uint8)

    Image.fromarray(pixels).save(path, format="PNG")


def Load_Dataset(manifest_path: str) -> CohortDataset:
    """Loads and validates a cohort dataset from a JSON manifest

    The manifest looks like

        {"images": [{"id": ..., "path": ..., "width": ..., "height": ...}],
         "fixations_csv": ...}

    with paths relative to the manifest. Durations or any other extra
    CSV columns are ignored.


    Parameters
    ----------
    manifest_path : str
        Path to the manifest file.


    Returns
    -------
    dataset : CohortDataset


    Raises
    ------
    FileNotFoundError
        If the manifest, the fixation file or an image is missing.

    ValueError
        If the manifest does not parse or any fixation row is invalid.
        Row errors name the CSV line number and the image_id.
    """

    if not os.path.isfile(manifest_path):
        raise FileNotFoundError(f"Manifest not found: {manifest_path}")

    with open(manifest_path, encoding="utf-8") as file:
        try:
            manifest = json.load(file)
        except json.JSONDecodeError as error:
            raise ValueError(f"Manifest {manifest_path} does not parse: {error}")

    if not isinstance(manifest, dict) or "images" not in manifest:
        raise ValueError(f"Manifest {manifest_path} has no 'images' list")

    if "fixations_csv" not in manifest:
        raise ValueError(f"Manifest {manifest_path} has no 'fixations_csv' entry")

    base_directory = os.path.dirname(os.path.abspath(manifest_path))

    images: dict[str, np.ndarray] = {}
    for index, entry in enumerate(manifest["images"]):

        missing = {"id", "path", "width", "height"} - set(entry)
        if missing:
            raise ValueError(
                f"Manifest image entry {index} is missing {sorted(missing)}"
            )

        image_id = str(entry["id"])
        if image_id in images:
            raise ValueError(f"Duplicate image id in manifest: {image_id}")

        image = Load_Image(os.path.join(base_directory, entry["path"]))

        height, width = image.shape[:2]
        if (width, height) != (int(entry["width"]), int(entry["height"])):
            raise ValueError(
                f"Image {image_id} is {width}x{height}, "
                + f"manifest declares {entry['width']}x{entry['height']}"
            )

        images[image_id] = image

    image_sizes = {
        image_id: (image.shape[1], image.shape[0]) for image_id, image in images.items()
    }

    fixations = Load_Fixations(
        os.path.join(base_directory, manifest["fixations_csv"]), image_sizes
    )

    return CohortDataset(images=images, fixations=fixations)


def Load_Fixations(path: str, image_sizes: dict[str, tuple[int, int]]) -> pd.DataFrame:
    """Reads and validates a fixation CSV

    Lines starting with '#' are comments. Every problem found is
    collected and raised together as one ValueError.


    Parameters
    ----------
    path : str
        Path to the CSV file.

    image_sizes : dict[str, tuple[int, int]]
        (width, height) for every known image_id.


    Returns
    -------
    fixations : pandas.DataFrame
        Columns observer_id, group, image_id, x, y, ordinal.
    """

    if not os.path.isfile(path):
        raise FileNotFoundError(f"Fixation file not found: {path}")

    with open(path, encoding="utf-8") as file:
        lines = file.readlines()

    # Keep the file line number of every row pandas will see
    kept_lines = []
    line_numbers = []
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped == "" or stripped.startswith("#"):
            continue
        kept_lines.append(line if line.endswith("\n") else line + "\n")
        line_numbers.append(number)

    if len(kept_lines) == 0:
        raise ValueError(f"Fixation file {path} has no header")

    try:
        table = pd.read_csv(
            io.StringIO("".join(kept_lines)),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.ParserError as error:
        raise ValueError(f"Fixation file {path} is malformed: {error}")

    table.columns = [str(column).strip() for column in table.columns]

    missing = [column for column in FIXATION_COLUMNS if column not in table.columns]
    if missing:
        raise ValueError(f"Fixation file {path} is missing columns {missing}")

    table = table[FIXATION_COLUMNS].copy()
    table.index = line_numbers[1 : len(table) + 1]

    errors: list[str] = []

    numeric = {}
    for column in ["x", "y", "ordinal"]:
        values = pd.to_numeric(table[column].str.strip(), errors="coerce")
        bad = values.isna() | (values % 1 != 0)
        for line in table.index[bad]:
            errors.append(
                f"line {line} (image_id {table.at[line, 'image_id']}): "
                + f"malformed {column} '{table.at[line, column]}'"
            )
        numeric[column] = values

    for line in table.index[table["observer_id"].str.strip() == ""]:
        errors.append(f"line {line}: empty observer_id")

    unknown_group = ~table["group"].isin(Constants.AGE_GROUPS)
    for line in table.index[unknown_group]:
        errors.append(
            f"line {line} (image_id {table.at[line, 'image_id']}): "
            + f"unknown age group '{table.at[line, 'group']}'"
        )

    unknown_image = ~table["image_id"].isin(list(image_sizes))
    for line in table.index[unknown_image]:
        errors.append(f"line {line}: unknown image_id '{table.at[line, 'image_id']}'")

    for line in table.index[~unknown_image]:
        if any(np.isnan(numeric[column][line]) for column in ["x", "y", "ordinal"]):
            continue

        image_id = table.at[line, "image_id"]
        width, height = image_sizes[image_id]
        x, y = numeric["x"][line], numeric["y"][line]

        if not (0 <= x < width and 0 <= y < height):
            errors.append(
                f"line {line} (image_id {image_id}): fixation ({x:g}, {y:g}) "
                + f"outside {width}x{height} image"
            )

        if numeric["ordinal"][line] < 0:
            errors.append(f"line {line} (image_id {image_id}): negative ordinal")

    # Keys as stored, so "obs " matches "obs" and "1.0" matches "1"
    keys = pd.DataFrame(
        {
            "observer_id": table["observer_id"].str.strip(),
            "image_id": table["image_id"],
            "ordinal": numeric["ordinal"],
        },
        index=table.index,
    )
    duplicated = keys.duplicated() & keys["ordinal"].notna()
    for line in table.index[duplicated]:
        errors.append(
            f"line {line} (image_id {table.at[line, 'image_id']}): duplicate "
            + f"(observer, image, ordinal) for observer {table.at[line, 'observer_id']}"
        )

    if errors:
        raise ValueError(f"Invalid fixation file {path}:\n" + "\n".join(errors))

    fixations = pd.DataFrame(
        {
            "observer_id": table["observer_id"].str.strip().to_numpy(),
            "group": table["group"].to_numpy(),
            "image_id": table["image_id"].to_numpy(),
            "x": numeric["x"].astype(np.int64).to_numpy(),
            "y": numeric["y"].astype(np.int64).to_numpy(),
            "ordinal": numeric["ordinal"].astype(np.int64).to_numpy(),
        }
    )

    return fixations


def Save_Dataset(dataset: CohortDataset, directory: str) -> str:
    """Writes a dataset as manifest, fixation CSV and PNG stimuli

    Output is byte-identical for identical datasets.


    Returns
    -------
    manifest_path : str
    """

    image_directory = os.path.join(directory, "images")
    os.makedirs(image_directory, exist_ok=True)

    entries = []
    for image_id, image in dataset.images.items():
        relative_path = f"images/{image_id}.png"
        Save_Image(image, os.path.join(directory, relative_path))

        entries.append(
            {
                "id": image_id,
                "path": relative_path,
                "width": int(image.shape[1]),
                "height": int(image.shape[0]),
            }
        )

    dataset.fixations[FIXATION_COLUMNS].to_csv(
        os.path.join(directory, "fixations.csv"), index=False, lineterminator="\n"
    )

    manifest_path = os.path.join(directory, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as file:
        json.dump({"images": entries, "fixations_csv": "fixations.csv"}, file, indent=2)
        file.write("\n")

    return manifest_path


def Build_Fixation_Map(dataset: CohortDataset, group: str, image_id: str) -> np.ndarray:
    """Binary map of every pixel fixated by any observer of a group

    Raises
    ------
    ValueError
        If the group has no fixations on the image.
    """

    if image_id not in dataset.images:
        raise ValueError(f"Unknown image_id: {image_id}")

    rows = dataset.fixations_for(group, image_id)
    if rows.empty:
        raise ValueError(f"No fixations for group {group} on image {image_id}")

    width, height = dataset.image_size(image_id)

    fixation_map = np.zeros((height, width))
    fixation_map[rows["y"].to_numpy(), rows["x"].to_numpy()] = 1

    return fixation_map


def Build_Human_Saliency_Map(
    fixation_map: np.ndarray, sigma: float = Constants.HUMAN_MAP_SIGMA
) -> np.ndarray:
    """Blurred and range-normalised fixation map"""

    return Normalize_Raster(Gaussian_Blur(fixation_map, sigma))


def Build_Human_Maps(
    dataset: CohortDataset,
    group: str,
    image_id: str,
    sigma: float = Constants.HUMAN_MAP_SIGMA,
) -> HumanMaps:

    fixation_map = Build_Fixation_Map(dataset, group, image_id)

    return HumanMaps(
        fixation_map=fixation_map,
        saliency_map=Build_Human_Saliency_Map(fixation_map, sigma),
    )
