"""Dual-distribution discrepancy anomaly detection.

Reconstruction ensembles over normal and normal+unlabeled data, intra/inter
discrepancy scores with optional uncertainty refinement, and a
self-supervised refinement net, all driven by the native `_ddad` module.
"""

try:
    from ._ddad import *  # noqa: F401,F403  (installed package layout)
    from ._ddad import __version__  # noqa: F401
except ImportError:  # in-tree builds put _ddad.so on PYTHONPATH directly
    from _ddad import *  # noqa: F401,F403
    from _ddad import __version__  # noqa: F401
