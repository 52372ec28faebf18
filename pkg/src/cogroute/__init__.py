"""cogroute: a deterministic simulator for prediction-guided packet routing.

Routers learn the health of their neighbors' outgoing channels from
periodically gossiped one-byte health indices, model each channel with a
small hidden Markov model, and use one-step-ahead predictions to pick
next hops. A blind baseline that always takes the first configured hop
runs over identical ground truth for comparison.
"""

from .cognition import (Advice, CognitivePacket, CognitiveDomain,
                        NeighborHistory, PacketDecodeError, advise,
                        decode_packet, emit_cognitive_packet, encode_packet,
                        ingest_cognitive_packet, predict_neighbor_fcpi,
                        retrain)
from .fcpi import (ChannelMetrics, Fcpi, QosThresholds, channel_up,
                   evaluate_channel, pack_bits, synthesize_fcpi, unpack)
from .hmm import (HmmModel, StatePath, baum_welch, forward, init_model,
                  predict_next_symbol, viterbi)
from .netsim import (ModeReport, SimReport, World, route_blind,
                     route_cognitive, run, step_epoch)
from .scenario import (Candidate, Channel, ChannelDynamics, Scenario,
                       ScenarioError, SimParams, Topology, TrafficDemand,
                       load_scenario)

__version__ = "0.1.0"
