from ._rfcurves import (
    activation_constants,
    fit_elastic_net,
    predict,
    q_function,
    run_trials,
    std_normal_pdf,
    sweep,
)

__all__ = [
    "activation_constants",
    "fit_elastic_net",
    "predict",
    "q_function",
    "run_trials",
    "std_normal_pdf",
    "sweep",
]
