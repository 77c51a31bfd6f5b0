"""Cell-based smoothed and polygonal finite elements on Voronoi meshes."""

from .const import VERSION
from .exceptions import PolySfemError

__version__ = VERSION

__all__ = ["PolySfemError", "__version__"]
