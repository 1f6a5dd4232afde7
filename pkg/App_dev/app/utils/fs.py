from pathlib import Path
from typing import Union


def ensure_dir(p: Union[str, Path]) -> Path:
    p = Path(p)
    p.mkdir(parents=True, exist_ok=True)
    return p


def ensure_parent(p: Union[str, Path]) -> Path:
    """Create the parent folder of a file path and return the path."""
    p = Path(p)
    ensure_dir(p.parent)
    return p
