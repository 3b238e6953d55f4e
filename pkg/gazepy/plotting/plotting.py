import matplotlib
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from PIL import Image

from gazepy.analysis import AgreementMatrix, ExplorativenessReport
from gazepy.raster import Check_Raster, Normalize_Raster
from gazepy.utils import Constants


GROUP_COLOURS = {
    "Y4": "#d62728",
    "Y6": "#ff7f0e",
    "Y8": "#2ca02c",
    "ADULT": "#1f77b4",
}


def Plot_Saliency_Map(
    ax: plt.Axes,
    saliency_map: np.ndarray,
    image: np.ndarray | None = None,
    fixations: pd.DataFrame | None = None,
    cmap: str = "jet",
    alpha: float = 0.5,
) -> None:
    """Draws a saliency map, optionally over its stimulus

    Parameters
    ----------
    ax : pyplot.Axes
        The pyplot axis to draw on.

    saliency_map : numpy.ndarray
        Map in [0, 1] at the image resolution.

    image : numpy.ndarray, optional
        Colour stimulus (h, w, 3) drawn underneath.

    fixations : pandas.DataFrame, optional
        Rows with x and y columns, drawn as points.

    cmap : str {"jet"}, optional
        Matplotlib colormap name.

    alpha : float {0.5}, optional
        Map opacity when drawn over a stimulus.


    Returns
    -------
    None
    """

    saliency_map = Check_Raster(saliency_map)

    if image is not None:
        ax.imshow(np.clip(image, 0, 1))
        ax.imshow(saliency_map, cmap=cmap, alpha=alpha, vmin=0, vmax=1)
    else:
        ax.imshow(saliency_map, cmap=cmap, vmin=0, vmax=1)

    if fixations is not None and len(fixations) > 0:
        ax.scatter(
            fixations["x"], fixations["y"], s=6, color="white", edgecolors="black", lw=0.3
        )

    ax.set_xticks([])
    ax.set_yticks([])


def Plot_Entropy_Curves(ax: plt.Axes, report: ExplorativenessReport) -> None:
    """Per-image entropy of each group, sorted ascending"""

    for group in report.group_means.index:
        entropies = np.sort(
            report.per_image.loc[report.per_image["group"] == group, "entropy"].to_numpy()
        )
        ax.plot(
            np.arange(len(entropies)),
            entropies,
            color=GROUP_COLOURS.get(group, "black"),
            label=group,
        )

    ax.set_xlabel("Image (sorted)")
    ax.set_ylabel("Entropy [bits]")
    ax.legend()


def Plot_Entropy_Histograms(
    ax: plt.Axes, report: ExplorativenessReport, bins: int = 20
) -> None:
    """Overlaid per-group histograms of per-image entropy"""

    edges = np.histogram_bin_edges(report.per_image["entropy"].to_numpy(), bins=bins)

    for group in report.group_means.index:
        ax.hist(
            report.per_image.loc[report.per_image["group"] == group, "entropy"],
            bins=edges,
            histtype="step",
            color=GROUP_COLOURS.get(group, "black"),
            label=group,
        )

    ax.set_xlabel("Entropy [bits]")
    ax.set_ylabel("Images")
    ax.legend()


def Plot_Agreement_Matrix(
    ax: plt.Axes, matrix: AgreementMatrix, cmap: str = "viridis"
) -> None:
    """Heat map of an agreement matrix, annotated with its scores"""

    scores = matrix.scores.to_numpy()

    mesh = ax.imshow(scores, cmap=cmap)
    plt.colorbar(mesh, ax=ax, label="Mean AUC")

    for row in range(scores.shape[0]):
        for column in range(scores.shape[1]):
            ax.text(
                column,
                row,
                f"{scores[row, column]:.3f}",
                ha="center",
                va="center",
                color="white" if row == column else "black",
            )

    ax.set_xticks(range(scores.shape[1]), matrix.scores.columns)
    ax.set_yticks(range(scores.shape[0]), matrix.scores.index)
    ax.set_xlabel("Fixations of")
    ax.set_ylabel("Saliency map of")


def Plot_Center_Bias(ax: plt.Axes, scores: pd.Series) -> None:
    """Bar chart of per-group center-bias scores"""

    ax.bar(
        scores.index,
        scores.to_numpy(),
        color=[GROUP_COLOURS.get(group, "black") for group in scores.index],
    )

    ax.axhline(0.5, color="black", ls="--", lw=1)
    ax.set_ylim(0, 1)
    ax.set_ylabel("Center bias (AUC)")


def Plot_Subset_Table(ax: plt.Axes, table: pd.DataFrame) -> None:
    """One line per group across the subset columns of a model table"""

    for group, row in table.iterrows():
        ax.plot(
            range(len(row)),
            row.to_numpy(),
            marker="o",
            color=GROUP_COLOURS.get(group, "black"),
            label=group,
        )

    ax.set_xticks(range(len(table.columns)), table.columns)
    ax.set_xlabel("Subset")
    ax.set_ylabel("Mean AUC")
    ax.legend()


def Map_To_Grayscale(saliency_map: np.ndarray) -> np.ndarray:
    """Range-normalised map as uint8, maximum 255 unless constant"""

    return np.round(Normalize_Raster(saliency_map) * 255).astype(np.uint8)


def Save_Map_Png(saliency_map: np.ndarray, path: str) -> None:
    """8-bit grayscale PNG of a map"""

    Image.fromarray(Map_To_Grayscale(saliency_map)).save(path, format="PNG")


def Save_Heatmap_Png(saliency_map: np.ndarray, path: str, cmap: str = "jet") -> None:
    """RGB PNG of a map through a matplotlib colormap"""

    colours = matplotlib.colormaps[cmap](Normalize_Raster(saliency_map))
    rgb = np.round(colours[..., :3] * 255).astype(np.uint8)

    Image.fromarray(rgb).save(path, format="PNG")


def Save_Map_Csv(saliency_map: np.ndarray, path: str) -> None:
    """Map values as rows of comma-separated floats"""

    saliency_map = Check_Raster(saliency_map)
    pd.DataFrame(saliency_map).to_csv(path, header=False, index=False, lineterminator="\n")


def Group_Figure(groups: tuple = Constants.AGE_GROUPS, size: float = 3):
    """One axis per group, side by side"""

    fig, axes = plt.subplots(1, len(groups), figsize=(size * len(groups), size))

    return fig, dict(zip(groups, np.atleast_1d(axes)))
