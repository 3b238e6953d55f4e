from .learning import *
