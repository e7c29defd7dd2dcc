"""Double spectral control for partially observed linear dynamical systems."""

from ._core import (
    CostFunction,
    DscParams,
    NatureState,
    NumericalError,
    ParameterError,
    SpectralBasis,
    StreamConvolver,
    SystemModel,
    build_hankel,
    counterfactual_outputs,
    dsc_control,
    dsc_features,
    load_basis,
    loss_gradient,
    make_basis,
    markov_parameters,
    random_system,
    read_csv,
    run_benchmark,
    run_experiment,
    save_basis,
    schedule_params,
    sliding_window,
    solve_dare,
    top_eigenpairs,
)

__all__ = [
    "CostFunction",
    "DscParams",
    "NatureState",
    "NumericalError",
    "ParameterError",
    "SpectralBasis",
    "StreamConvolver",
    "SystemModel",
    "build_hankel",
    "counterfactual_outputs",
    "dsc_control",
    "dsc_features",
    "load_basis",
    "loss_gradient",
    "make_basis",
    "markov_parameters",
    "random_system",
    "read_csv",
    "run_benchmark",
    "run_experiment",
    "save_basis",
    "schedule_params",
    "sliding_window",
    "solve_dare",
    "top_eigenpairs",
]
