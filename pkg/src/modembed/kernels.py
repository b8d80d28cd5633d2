"""Backend selection for the hot kernels.

Prefers the compiled Cython extension and falls back to the numpy
implementation when the extension was not built.  Set MODEMBED_KERNELS=py
or MODEMBED_KERNELS=compiled to force a backend (``compiled`` raises if
the extension is missing).  ``benchmarks/bench_kernels.py`` compares the
two.
"""

import os

_requested = os.environ.get("MODEMBED_KERNELS", "").strip().lower()
if _requested not in ("", "py", "compiled"):
    raise RuntimeError(
        f"MODEMBED_KERNELS must be 'py' or 'compiled', got {_requested!r}"
    )

if _requested == "py":
    from modembed import _kernels_py as _impl

    COMPILED = False
else:
    try:
        from modembed import _kernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        if _requested == "compiled":
            raise
        from modembed import _kernels_py as _impl

        COMPILED = False

BACKEND = "compiled" if COMPILED else "py"

lag_diff_matrix = _impl.lag_diff_matrix
windowed_corr_matrix = _impl.windowed_corr_matrix
bin_index_array = _impl.bin_index_array
hist2d_counts = _impl.hist2d_counts
