"""Kernel backend selection.

The compiled extension is used when importable; set ``BUSPLANNER_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

if os.environ.get("BUSPLANNER_PURE_PYTHON"):
    from . import _pykernels as backend
else:
    try:
        from . import _ckernels as backend
    except ImportError:  # extension not built
        from . import _pykernels as backend

BACKEND = "cython" if backend.__name__.endswith("_ckernels") else "python"

hermite_eval = backend.hermite_eval
project_point = backend.project_point
project_points = backend.project_points
arc_edge = backend.arc_edge

PROJ_OK = 0
PROJ_BEFORE_START = 1
PROJ_BEYOND_END = 2
PROJ_BEYOND_CENTER = 3
ARC_OUT_OF_REACH = 1
