from .errors import *
from .helper_functions import *
