"""Kernel backend selection.

The compiled extension is used when it was built; otherwise (or when
``RLPAGERANK_PURE_PYTHON=1`` is set) the numpy fallback is used. Both
produce identical results for identical inputs.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("RLPAGERANK_PURE_PYTHON") != "1":
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = active.BACKEND

mix64 = active.mix64
draw64 = active.draw64
bounded = active.bounded
unit = active.unit
uniform_ints = active.uniform_ints
sample_pairs = active.sample_pairs
apply_steps = active.apply_steps
run_steps = active.run_steps

__all__ = [
    "BACKEND", "active", "python_backend", "compiled_backend", "mix64", "draw64",
    "bounded", "unit", "uniform_ints", "sample_pairs", "apply_steps", "run_steps",
]
