"""
Raster containers and the low-level operations every map is built with.

A raster is a 2-D float64 numpy array of shape (height, width). Colour
images are (height, width, 3) arrays with values in [0, 1].
"""

import numpy as np
import scipy.ndimage

from gazepy.utils import Constants


def Check_Raster(raster) -> np.ndarray:
    """Validates and returns a raster as a float64 array

    Raises
    ------
    ValueError
        If the input is not 2-D, is empty, or holds non-finite values.
    """

    raster = np.asarray(raster, dtype=np.float64)

    if raster.ndim != 2:
        raise ValueError(f"Raster must be 2-D, got shape {raster.shape}")

    if raster.size == 0:
        raise ValueError("Raster is empty")

    if not np.all(np.isfinite(raster)):
        raise ValueError("Raster contains non-finite values")

    return raster


def Check_Color_Image(image) -> np.ndarray:

    image = np.asarray(image, dtype=np.float64)

    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"Colour image must have shape (h, w, 3), got {image.shape}")

    if image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError("Colour image is empty")

    if not np.all(np.isfinite(image)):
        raise ValueError("Colour image contains non-finite values")

    if image.min() < 0 or image.max() > 1:
        raise ValueError("Colour image values must lie in [0, 1]")

    return image


def Normalize_Raster(raster: np.ndarray) -> np.ndarray:
    """Affine range normalisation to [0, 1]

    Constant rasters (to within floating point residue) map to all
    zeros.


    Parameters
    ----------
    raster : numpy.ndarray
        Input raster.


    Returns
    -------
    normalized : numpy.ndarray
        (raster - min) / (max - min), or zeros when max == min.
    """

    raster = Check_Raster(raster)

    minimum = raster.min()
    maximum = raster.max()
    value_range = maximum - minimum

    if value_range <= 1e-12 * max(1.0, abs(maximum), abs(minimum)):
        return np.zeros_like(raster)

    return (raster - minimum) / value_range


def Gaussian_Blur(raster: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian convolution

    The kernel is truncated at 3 sigma and renormalised to unit sum.
    Borders replicate the edge pixels.


    Parameters
    ----------
    raster : numpy.ndarray
        Input raster.

    sigma : float
        Standard deviation in pixels, must be positive.


    Returns
    -------
    blurred : numpy.ndarray
        Raster of the same shape.
    """

    raster = Check_Raster(raster)

    if not sigma > 0:
        raise ValueError(f"Blur sigma must be positive, got {sigma}")

    return scipy.ndimage.gaussian_filter(raster, sigma, mode="nearest", truncate=3.0)


def Build_Gaussian_Pyramid(
    raster: np.ndarray,
    levels: int = Constants.PYRAMID_LEVELS,
    sigma: float = Constants.PYRAMID_SIGMA,
) -> list[np.ndarray]:
    """Blur-and-decimate pyramid

    Level 0 is the input. Each further level is the previous one
    blurred with `sigma` and then subsampled by 2, so every side is
    ceil-halved.


    Parameters
    ----------
    raster : numpy.ndarray
        Input raster.

    levels : int, optional
        Total number of levels including the input.

    sigma : float {1}, optional
        Pre-decimation blur in pixels.


    Returns
    -------
    pyramid : list[numpy.ndarray]
        One raster per level, finest first.
    """

    raster = Check_Raster(raster)

    if levels < 1:
        raise ValueError(f"A pyramid needs at least one level, got {levels}")

    pyramid = [raster]
    for _ in range(1, levels):
        previous = pyramid[-1]
        pyramid.append(Gaussian_Blur(previous, sigma)[::2, ::2])

    return pyramid


def Resize_Bilinear(raster: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Bilinear resampling with pixel-centre alignment

    Source coordinates are (destination + 0.5) * scale - 0.5, clamped to
    the raster, so constant inputs stay constant and same-size resizes
    return an unchanged copy.
    """

    raster = Check_Raster(raster)

    if new_width < 1 or new_height < 1:
        raise ValueError(f"Resize targets must be >= 1, got {new_width}x{new_height}")

    height, width = raster.shape
    if (new_height, new_width) == (height, width):
        return raster.copy()

    row_coords = (np.arange(new_height) + 0.5) * (height / new_height) - 0.5
    column_coords = (np.arange(new_width) + 0.5) * (width / new_width) - 0.5

    row_coords = np.clip(row_coords, 0, height - 1)
    column_coords = np.clip(column_coords, 0, width - 1)

    rows, columns = np.meshgrid(row_coords, column_coords, indexing="ij")

    return scipy.ndimage.map_coordinates(
        raster, [rows, columns], order=1, mode="nearest"
    )
