"""Hot-kernel backend selection.

The compiled Cython extension is preferred when present; the numpy fallback
is used otherwise, or when FIELDBRIDGE_PURE_PYTHON is set in the
environment. Both expose the same functions and the test suite checks they
agree.
"""

import os

from . import _pure

if os.environ.get("FIELDBRIDGE_PURE_PYTHON"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]
        BACKEND = "ext"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

# RBF kind codes and fit status codes are backend-independent constants.
RBF_GAUSSIAN = _pure.RBF_GAUSSIAN
RBF_C4 = _pure.RBF_C4
RBF_CONST = _pure.RBF_CONST
RBF_IDENTITY = _pure.RBF_IDENTITY
RBF_MULTIQUADRIC = _pure.RBF_MULTIQUADRIC
RBF_INVERSE_MULTIQUADRIC = _pure.RBF_INVERSE_MULTIQUADRIC
RBF_THIN_PLATE_SPLINE = _pure.RBF_THIN_PLATE_SPLINE
RBF_CUBIC_SPLINE = _pure.RBF_CUBIC_SPLINE
FIT_OK = _pure.FIT_OK
FIT_SINGULAR = _pure.FIT_SINGULAR
FIT_EMPTY = _pure.FIT_EMPTY

rbf_weights = _impl.rbf_weights
locate_batch = _impl.locate_batch
fixed_radius_supports = _impl.fixed_radius_supports
adaptive_radius_supports = _impl.adaptive_radius_supports
fit_many = _impl.fit_many
clip_batch = _impl.clip_batch
