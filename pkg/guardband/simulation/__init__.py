from .simulator import *
