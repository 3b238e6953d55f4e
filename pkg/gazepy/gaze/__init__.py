from .gaze import *
