from .patches import *
