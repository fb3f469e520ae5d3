"""Microlocal propagation, prediction and detection on curved spacetimes."""

from ._core import (
    Metric,
    MicrolocError,
    __version__,
    anticommutator_residual,
    gammas,
    metric_at,
    nabla_gamma_residual,
    null_covector,
    predict_pol_dirac,
    predict_wf,
    principal_symbol,
    product_admissible,
    propagate,
    rpt_residual,
    run,
    sample,
    sample_names,
    slash,
    transport,
    verify,
    wf_detect,
)

__all__ = [
    "Metric",
    "MicrolocError",
    "__version__",
    "anticommutator_residual",
    "gammas",
    "metric_at",
    "nabla_gamma_residual",
    "null_covector",
    "predict_pol_dirac",
    "predict_wf",
    "principal_symbol",
    "product_admissible",
    "propagate",
    "rpt_residual",
    "run",
    "sample",
    "sample_names",
    "slash",
    "transport",
    "verify",
    "wf_detect",
]
