from .birth_death import *
from .schemes import *
from .traffic import *
