"""Deterministic simulator of price-based congestion control with
least-squares recovery of feedback messages lost to packet drops."""

from .delay_model import (RttRecord, SaturatedLinkError, link_max_delay,
                          link_rtt, link_term, path_delay, rtt_max_update,
                          saturated_delay)
from .engine import (IterationRecord, LossPolicy, ScenarioConfig, Simulation,
                     Summary, inject_loss, run_scenario, summary)
from .ls_estimator import (CorrectionWindow, InsufficientHistory, LsAggregates,
                           WindowStats, advance_window, correct,
                           predict_demand, predict_interval, window_stats)
from .num_core import (PriceState, objective, price_update, step_size,
                       user_demand, utility, utility_slope)
from .topology import (Link, Network, TopologyError, User, aggregate_flow,
                       build_network, load_topology, parking_lot, path_price,
                       single_link)
from .wire_codec import (CodecError, PriceMessage, checksum, decode, encode,
                         hex_dump)

__version__ = "0.1.0"
