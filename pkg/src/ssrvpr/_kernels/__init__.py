"""Hot-loop kernels: compiled extension when built, numpy fallback otherwise.

Set SSRVPR_PURE_PYTHON=1 to force the fallback even when the extension is
available (used by the benchmark and the cross-backend tests).
"""

import os

_forced = os.environ.get("SSRVPR_PURE_PYTHON", "").strip() not in ("", "0")

if _forced:
    from . import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl  # type: ignore[no-redef]

        BACKEND = "python"

thin = _impl.thin
shape_context_bins = _impl.shape_context_bins


def available_backends() -> list[str]:
    """Importable backend names, for benchmarks and equivalence tests."""
    found = ["python"]
    try:
        from . import _core  # noqa: F401

        found.append("compiled")
    except ImportError:
        pass
    return found
