import hashlib
import json
import multiprocessing
from typing import Callable, Iterable

from tqdm import tqdm
import numpy as np


class User:

    OUTPUT_DIRECTORY = "./gazepy_output/"

    # None uses every available cpu
    PROCESSES = None


class Constants:
    # If no units are specified in the variable name,
    # pixels are implied for lengths.
    AGE_GROUPS = ("Y4", "Y6", "Y8", "ADULT")

    HUMAN_MAP_SIGMA = 25  # px
    NUM_THRESHOLDS = 256
    NUM_BINS = 256

    # Multi-scale center-surround features
    PYRAMID_LEVELS = 9  # levels 0..8
    PYRAMID_SIGMA = 1  # px, pre-decimation blur
    CENTER_SCALES = (2, 3, 4)
    SURROUND_DELTAS = (3, 4)
    COMBINATION_LEVEL = 4
    MIN_IMAGE_SIDE = 128  # px
    ORIENTATIONS = (0, 45, 90, 135)  # degrees
    GABOR_WAVELENGTH = 8  # px
    GABOR_SIGMA = 4  # px
    GABOR_ASPECT = 1
    COLOR_INTENSITY_FLOOR = 0.1  # fraction of max intensity
    BORDER_FADE = 0.2  # fraction of each side faded to zero in feature maps
    NUM_SCALES = 6

    # Learned combination
    SAMPLES_PER_IMAGE = 10
    REGULARIZATION = 1e-2
    SOLVER_EPOCHS = 200
    SOLVER_TOLERANCE = 1e-6
    CENTER_WEIGHT_GRID = tuple(round(0.05 * i, 2) for i in range(11))
    AUC_CHANCE_BAND = 0.02  # ROC area half-width around 0.5 read as chance
    TRAIN_COUNT = 20
    MODEL_FILE_VERSION = 1

    # Patch dissimilarity
    PATCH_SIZES = (8, 16, 32, 64)  # px
    PCA_DIMENSIONS = 10

    # Synthetic cohorts
    SYNTH_WIDTH = 256  # px
    SYNTH_HEIGHT = 256  # px
    SYNTH_IMAGES = 10
    SYNTH_OBSERVERS = 5
    SYNTH_FIXATIONS = 12  # per observer per image
    SYNTH_CENTER_SIGMA = 30  # px
    SYNTH_ANCHORS = 4  # feature peaks per image
    SYNTH_REGIONS = 3  # attended regions per group
    SYNTH_REGION_RADIUS = 0.35  # fraction of the shorter side
    SYNTH_ANCHOR_SEPARATION = 32  # px
    SYNTH_MAX_REDRAWS = 100  # per fixation, before clipping to the image

    @staticmethod
    def AGE_ORDINAL(group: str) -> int:
        if group not in Constants.AGE_GROUPS:
            raise ValueError(f"Unknown age group: {group}")

        return Constants.AGE_GROUPS.index(group)


def Map_In_Parallel(
    function: Callable,
    items: Iterable,
    processes: int | None = 1,
    desc: str = "Processing",
    verbose: bool = False,
) -> list:
    """Applies a function to every item, optionally over a process pool

    Results are returned in input order regardless of the worker count,
    so any reduction over them is deterministic.


    Parameters
    ----------
    function : Callable
        A picklable (module-level or functools.partial) callable.

    items : Iterable
        The inputs to map over.

    processes : int | None {1}, optional
        Number of worker processes. 1 runs serially, None uses every
        available cpu.

    desc : str, optional
        Progress bar description.

    verbose : bool {False, True}, optional
        Show a progress bar.


    Returns
    -------
    results : list
        function(item) for each item, in order.
    """

    items = list(items)

    if processes is None:
        processes = multiprocessing.cpu_count()

    if processes > 1 and len(items) > 1:
        with multiprocessing.Pool(min(processes, len(items))) as pool:
            return list(
                tqdm(
                    pool.imap(function, items),
                    total=len(items),
                    desc=desc,
                    disable=not verbose,
                )
            )

    return [
        function(item)
        for item in tqdm(items, total=len(items), desc=desc, disable=not verbose)
    ]


def Config_Fingerprint(**settings) -> dict:
    """Stable description of a run configuration

    Values are made JSON compatible, keys sorted, and a sha256 digest of
    the canonical encoding is added under "digest".
    """

    def jsonable(value):
        if isinstance(value, (np.integer,)):
            return int(value)
        if isinstance(value, (np.floating,)):
            return float(value)
        if isinstance(value, (tuple, list, np.ndarray)):
            return [jsonable(v) for v in value]
        if isinstance(value, dict):
            return {str(k): jsonable(v) for k, v in sorted(value.items())}
        return value

    fingerprint = {key: jsonable(settings[key]) for key in sorted(settings)}

    canonical = json.dumps(fingerprint, sort_keys=True, separators=(",", ":"))
    fingerprint["digest"] = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    return fingerprint
