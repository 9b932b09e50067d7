"""Backend selection for the scoring kernels.

The compiled extension (``gradualml._kernels``, Cython) is preferred; the
numpy fallback is picked automatically when the extension is missing or
when ``GRADUALML_PURE_PYTHON=1`` is set. Both expose the same functions
and agree numerically (see tests/test_kernels.py); results are
bit-identical across runs within a backend.
"""

from __future__ import annotations

import os

_force_python = os.environ.get("GRADUALML_PURE_PYTHON", "").strip() not in ("", "0")

if _force_python:
    from gradualml import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from gradualml import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from gradualml import _kernels_py as _impl

        BACKEND = "python"

cond_logits = _impl.cond_logits
enum_marginal = _impl.enum_marginal
