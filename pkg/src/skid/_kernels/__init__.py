"""Hot-loop kernels with a compiled lane and a pure numpy fallback.

The compiled extension is used when it imported successfully and the
environment variable SKID_PURE is unset. `IMPL` reports the active lane.
"""

import os

from skid._kernels import pure as _pure

if os.environ.get("SKID_PURE"):
    _impl = _pure
else:
    try:
        from skid._kernels import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

IMPL = _impl.IMPL
rec_counts = _impl.rec_counts
spfh_accumulate = _impl.spfh_accumulate
point_plane_system = _impl.point_plane_system

__all__ = ["IMPL", "rec_counts", "spfh_accumulate", "point_plane_system"]
