"""Kernel selection.

The compiled extension is used when importable; ``LIEQUAD_PURE_PYTHON=1``
forces the pure-Python reference kernels.
"""

import os

from . import _pykernels

COMPILED = False
if os.environ.get("LIEQUAD_PURE_PYTHON") != "1":
    try:
        from . import _kernels as kernels

        COMPILED = True
    except ImportError:
        kernels = _pykernels
else:
    kernels = _pykernels

COMPLEX = _pykernels.COMPLEX
POLAR = _pykernels.POLAR
ALGEBRA = _pykernels.ALGEBRA
RIEMANNIAN = _pykernels.RIEMANNIAN
RK4_FIXED = _pykernels.RK4_FIXED
RK45_ADAPTIVE = _pykernels.RK45_ADAPTIVE
OK, STEP_UNDERFLOW, BUDGET, RADIAL_UNDERFLOW = (
    _pykernels.OK, _pykernels.STEP_UNDERFLOW, _pykernels.BUDGET, _pykernels.RADIAL_UNDERFLOW)
DIMS = _pykernels.DIMS


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
