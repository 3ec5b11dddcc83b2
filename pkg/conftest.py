"""Allow running the tests from a source checkout without installing:
falls back to the src/ tree (pure evaluation backend) when the package is
not importable."""

import sys
from pathlib import Path

try:
    import skewric  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).parent / "src"))
