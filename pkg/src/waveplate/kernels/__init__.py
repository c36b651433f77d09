"""Backend selection for the hot kernels.

The compiled extension is preferred when importable; the numpy reference
module is the fallback.  Set WAVEPLATE_KERNELS=py to force the reference
backend, or =cy to require the compiled one (ImportError if missing).
"""

import os

from . import reference

_forced = os.environ.get("WAVEPLATE_KERNELS", "").strip().lower()

if _forced in ("py", "python", "reference"):
    backend = reference
    backend_name = "reference"
else:
    try:
        from . import _fast as backend

        backend_name = "compiled"
    except ImportError:
        if _forced in ("cy", "cython", "compiled"):
            raise ImportError(
                "WAVEPLATE_KERNELS requested the compiled backend but the "
                "extension is not built; reinstall the package or unset the "
                "variable"
            )
        backend = reference
        backend_name = "reference"
