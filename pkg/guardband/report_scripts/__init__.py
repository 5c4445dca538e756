from .chart import *
from .sweep import *
