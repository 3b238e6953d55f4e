from .itti import *
