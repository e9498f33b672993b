"""Toolkit for measuring regularity of set-valued mappings and certifying
descent-type and R-class algorithm runs on a catalog of closed-form operators."""

from .geometry import (
    MEMBERSHIP_TOL,
    DimensionMismatchError,
    EmptyTargetError,
    PointSet,
    Region,
    Window,
    as_point,
    distance_to_set,
    excess,
    sample_window,
)
from .setmap import (
    DcSplit,
    MissingOracleError,
    OperatorEntry,
    ProxOracle,
    SetValuedMap,
    WindowRequiredError,
    eval_windowed,
    invert,
)
from .catalog import CatalogError, catalog_listing, catalog_lookup, catalog_names
from .analysis import (
    CalmnessResult,
    GraphTestResult,
    HolderFit,
    InverseLipschitzResult,
    LojFit,
    ModulusCurve,
    PlkConfig,
    PlkResult,
    calmness_estimate,
    certify_inverse_lipschitz,
    check_plk_exponent,
    closed_graph_test,
    estimate_modulus,
    fit_holder,
    lojasiewicz_fit,
)
from .solvers import (
    IterateTrace,
    StopRule,
    make_synthetic_trace,
    resolvent,
    run_dca,
    run_gdm,
    run_ppa,
    run_qpower_prox,
    run_shifted_ppa,
)
from .certify import (
    Certificate,
    DistanceVerdict,
    check_h1,
    check_h2,
    check_h3,
    check_h4,
    check_rclass,
    distance_trace,
)

__version__ = "0.1.0"

__all__ = [
    "MEMBERSHIP_TOL",
    "DimensionMismatchError",
    "EmptyTargetError",
    "PointSet",
    "Region",
    "Window",
    "as_point",
    "distance_to_set",
    "excess",
    "sample_window",
    "DcSplit",
    "MissingOracleError",
    "OperatorEntry",
    "ProxOracle",
    "SetValuedMap",
    "WindowRequiredError",
    "eval_windowed",
    "invert",
    "CatalogError",
    "catalog_listing",
    "catalog_lookup",
    "catalog_names",
    "CalmnessResult",
    "GraphTestResult",
    "HolderFit",
    "InverseLipschitzResult",
    "LojFit",
    "ModulusCurve",
    "PlkConfig",
    "PlkResult",
    "calmness_estimate",
    "certify_inverse_lipschitz",
    "check_plk_exponent",
    "closed_graph_test",
    "estimate_modulus",
    "fit_holder",
    "lojasiewicz_fit",
    "IterateTrace",
    "StopRule",
    "make_synthetic_trace",
    "resolvent",
    "run_dca",
    "run_gdm",
    "run_ppa",
    "run_qpower_prox",
    "run_shifted_ppa",
    "Certificate",
    "DistanceVerdict",
    "check_h1",
    "check_h2",
    "check_h3",
    "check_h4",
    "check_rclass",
    "distance_trace",
]
