"""JSON encoder for polysfem run summaries."""

import enum
import json
from pathlib import Path
from typing import Any

import numpy as np


class CustomJSONEncoder(json.JSONEncoder):
    """JSONEncoder that also understands numpy values, enums and paths."""

    def default(self, o: Any) -> Any:
        """Convert certain objects."""
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, enum.Enum):
            return o.value
        if isinstance(o, Path):
            return str(o)

        return super().default(o)
