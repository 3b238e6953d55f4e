from .evaluation import *
