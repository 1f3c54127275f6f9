"""Transformations of surfaces in R^4, with invariant checks.

Surfaces, pipeline stages and run configs use the same JSON shapes as the
command-line tool; pass them as dicts or as a path to a config file.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from . import _core
from ._core import ConfigError, Error, GeometryError, IoError, JetError, ParseError

__version__ = _core.version()

__all__ = [
    "ConfigError",
    "Error",
    "GeometryError",
    "IoError",
    "JetError",
    "ParseError",
    "RunResult",
    "check",
    "check_names",
    "classify",
    "geometry",
    "run",
    "transform",
]


@dataclass
class RunResult:
    report: Dict[str, Any]
    passed: bool
    # (points, rank) per stage; points has shape (nv, nu, 4), nan where masked.
    meshes: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def checks(self, name: Optional[str] = None) -> List[Dict[str, Any]]:
        return [c for c in self.report["checks"] if name is None or c["name"] == name]


def _config(config) -> Tuple[str, str]:
    if isinstance(config, (str, os.PathLike)):
        path = os.path.abspath(os.fspath(config))
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise IoError(f"cannot read {path}: {e.strerror}") from e
        return text, os.path.dirname(path)
    return json.dumps(config), os.getcwd()


def run(config) -> RunResult:
    """Runs the pipeline and every check; returns the report and the meshes."""
    text, base = _config(config)
    out = _core.run(text, base, True)
    return RunResult(json.loads(out["report"]), out["passed"], list(out["meshes"]))


def check(config) -> RunResult:
    """Like run, without the meshes."""
    text, base = _config(config)
    out = _core.run(text, base, False)
    return RunResult(json.loads(out["report"]), out["passed"])


def classify(config) -> Dict[str, Any]:
    text, base = _config(config)
    return json.loads(_core.classify(text, base))


def transform(surface: Dict[str, Any], stage, grid=(64, 64), base=None, tolerances=None):
    """One stage on a surface; returns (points, rank) on the grid."""
    nu, nv = grid
    return _core.transform(
        json.dumps(surface), int(nu), int(nv), json.dumps(stage),
        None if base is None else (float(base[0]), float(base[1])),
        json.dumps(tolerances or {}),
    )


def geometry(surface: Dict[str, Any], u: float, v: float) -> Dict[str, Any]:
    """Frame, curvatures, point class and c (when defined) at one chart point."""
    return _core.geometry(json.dumps(surface), float(u), float(v))


def check_names() -> List[str]:
    return list(_core.check_names())
