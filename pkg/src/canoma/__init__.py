"""Cache-aided NOMA downlink for vehicular links: Monte Carlo simulator
and semi-analytic success-probability oracle."""

from .access import (
    SCHEMES,
    DecodeThresholds,
    Outcome,
    PowerAllocation,
    UserOrdering,
    decode_noma,
    decode_oma,
    oma_effective_threshold,
    order_users,
    split_power,
)
from .channel import (
    ChannelGain,
    LinkSpec,
    NakagamiStage,
    mean_link_gain,
    sample_gamma,
    sample_link_gain,
)
from .content import (
    CacheContents,
    CacheScenario,
    Catalog,
    PopularityProfile,
    ScenarioClass,
    classify_scenario,
    place_cache,
    request_from_uniform,
    sample_request,
    scenario_distribution,
    zipf_profile,
)
from .engine import (
    METRICS,
    DEFAULT_LINK_SPEC,
    Estimate,
    ResultTable,
    SweepRow,
    TrialConfig,
    db_to_linear,
    linear_to_db,
    run_point,
    run_point_multi,
    summarize,
    sweep,
)
from .errors import CanomaError, OracleUnsupportedError, ParameterError
from .oracle import (
    INFEASIBLE,
    GainThresholdEvent,
    OracleResult,
    conditional_success_prob,
    gamma_ccdf,
    product_gain_ccdf,
    reduce_to_gain_event,
    success_prob,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "CanomaError",
    "ParameterError",
    "OracleUnsupportedError",
    # channel
    "ChannelGain",
    "NakagamiStage",
    "LinkSpec",
    "sample_gamma",
    "sample_link_gain",
    "mean_link_gain",
    # content
    "Catalog",
    "PopularityProfile",
    "CacheContents",
    "CacheScenario",
    "ScenarioClass",
    "zipf_profile",
    "place_cache",
    "sample_request",
    "request_from_uniform",
    "classify_scenario",
    "scenario_distribution",
    # access
    "SCHEMES",
    "PowerAllocation",
    "DecodeThresholds",
    "UserOrdering",
    "Outcome",
    "order_users",
    "split_power",
    "oma_effective_threshold",
    "decode_noma",
    "decode_oma",
    # oracle
    "INFEASIBLE",
    "GainThresholdEvent",
    "OracleResult",
    "gamma_ccdf",
    "product_gain_ccdf",
    "reduce_to_gain_event",
    "conditional_success_prob",
    "success_prob",
    # engine
    "METRICS",
    "DEFAULT_LINK_SPEC",
    "TrialConfig",
    "Estimate",
    "SweepRow",
    "ResultTable",
    "db_to_linear",
    "linear_to_db",
    "summarize",
    "run_point",
    "run_point_multi",
    "sweep",
]
