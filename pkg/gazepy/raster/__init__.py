from .raster import *
