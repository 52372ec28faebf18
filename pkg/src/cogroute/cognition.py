"""The cognitive side of a router: learn neighbors' channel health, advise routing.

Each router keeps, per neighbor it can forward to, eight binary hidden
Markov models (one per forward channel). Neighbors periodically gossip
their own measured channel-health byte; those bytes are unpacked into
per-channel bit streams, the models are retrained on a sliding window,
and one-step-ahead predictions are reassembled into a predicted health
byte per neighbor. The advisor ranks candidate next hops by whether the
onward channel a route needs is predicted up.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import fcpi, hmm
from .fcpi import ChannelMetrics, Fcpi, QosThresholds

WIRE_VERSION = 1
WIRE_FORMAT = ">BHIB"  # version, sender id, epoch, health byte
WIRE_SIZE = struct.calcsize(WIRE_FORMAT)

DEFAULT_HMM_STATES = 3
DEFAULT_WINDOW = 200
OPTIMISTIC_FCPI = 255


class PacketDecodeError(ValueError):
    """Raised for wire data with a bad length or version."""


@dataclass(frozen=True)
class CognitivePacket:
    """One gossip message: the sender's own channel-health byte at an epoch."""

    version: int
    sender_id: int
    epoch: int
    fcpi: Fcpi

    def __post_init__(self):
        if self.version != WIRE_VERSION:
            raise ValueError(f"unsupported packet version {self.version}")
        if not 0 <= self.sender_id <= 0xFFFF:
            raise ValueError("sender_id must fit in 16 bits")
        if not 0 <= self.epoch <= 0xFFFFFFFF:
            raise ValueError("epoch must fit in 32 bits")
        if not 0 <= self.fcpi <= 0xFF:
            raise ValueError("fcpi must fit in one byte")


def encode_packet(pkt: CognitivePacket) -> bytes:
    """Serialize to the 8-byte big-endian wire layout."""
    return struct.pack(WIRE_FORMAT, pkt.version, pkt.sender_id,
                       pkt.epoch, pkt.fcpi)


def decode_packet(data: bytes) -> CognitivePacket:
    """Parse wire bytes, rejecting any other length or version."""
    if len(data) != WIRE_SIZE:
        raise PacketDecodeError(
            f"expected {WIRE_SIZE} bytes, got {len(data)}")
    version, sender_id, epoch, byte = struct.unpack(WIRE_FORMAT, data)
    if version != WIRE_VERSION:
        raise PacketDecodeError(f"unsupported packet version {version}")
    return CognitivePacket(version=version, sender_id=sender_id,
                           epoch=epoch, fcpi=byte)


def emit_cognitive_packet(self_metrics: Sequence[Optional[ChannelMetrics]],
                          thresholds: QosThresholds, self_id: int,
                          epoch: int) -> CognitivePacket:
    """Build the gossip packet describing this router's own outgoing channels."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    byte = fcpi.synthesize_fcpi(self_metrics, thresholds)
    return CognitivePacket(version=WIRE_VERSION, sender_id=self_id,
                           epoch=epoch, fcpi=byte)


def _channel_seed(base_seed: int, neighbor_id: int, channel: int) -> int:
    # Stable across platforms; distinct per (neighbor, channel) pair.
    return int(np.random.SeedSequence(
        [base_seed, neighbor_id, channel]).generate_state(1)[0])


@dataclass(eq=False)
class NeighborHistory:
    """Per-neighbor learning state: 8 bit streams and 8 models.

    The bit streams hold the most recent `window` observations for each of
    the neighbor's channels; all eight always have equal length.
    """

    neighbor_id: int
    observed: list[list[int]]
    models: list[hmm.HmmModel]
    last_epoch_seen: int = -1

    @classmethod
    def fresh(cls, neighbor_id: int, n_states: int = DEFAULT_HMM_STATES,
              seed: int = 0) -> "NeighborHistory":
        models = [hmm.init_model(n_states, 2,
                                 _channel_seed(seed, neighbor_id, ch))
                  for ch in range(fcpi.NUM_CHANNELS)]
        return cls(neighbor_id=neighbor_id,
                   observed=[[] for _ in range(fcpi.NUM_CHANNELS)],
                   models=models)

    def length(self) -> int:
        return len(self.observed[0])


def ingest_cognitive_packet(store: dict[int, NeighborHistory],
                            pkt: CognitivePacket, *,
                            n_states: int = DEFAULT_HMM_STATES,
                            window: int = DEFAULT_WINDOW,
                            seed: int = 0) -> dict[int, NeighborHistory]:
    """Append one observation per channel to the sender's history.

    Unknown senders get a fresh history. Epoch gaps are filled by
    repeating the last observation so the streams stay aligned with the
    gossip cadence; duplicate or out-of-order epochs are dropped.
    """
    history = store.get(pkt.sender_id)
    if history is None:
        history = NeighborHistory.fresh(pkt.sender_id, n_states=n_states,
                                        seed=seed)
        store[pkt.sender_id] = history
    if pkt.epoch <= history.last_epoch_seen:
        return store

    bits = fcpi.unpack(pkt.fcpi)
    gap = 0
    if history.last_epoch_seen >= 0:
        gap = pkt.epoch - history.last_epoch_seen - 1
    for ch in range(fcpi.NUM_CHANNELS):
        seq = history.observed[ch]
        if gap > 0 and seq:
            seq.extend([seq[-1]] * gap)
        seq.append(bits[ch])
        if len(seq) > window:
            del seq[:len(seq) - window]
    history.last_epoch_seen = pkt.epoch
    return store


def retrain(history: NeighborHistory, window: int = DEFAULT_WINDOW,
            em_iters: int = 5, tol: float = 1e-4) -> NeighborHistory:
    """Re-fit all eight channel models on the most recent window of bits.

    Channels with fewer than two observations are left untouched. Models
    are warm-started from their current parameters, so repeated calls
    track drift instead of starting over.
    """
    for ch in range(fcpi.NUM_CHANNELS):
        seq = history.observed[ch][-window:]
        if len(seq) < 2:
            continue
        history.models[ch], _ = hmm.baum_welch(
            history.models[ch], [seq], max_iters=em_iters, tol=tol)
    return history


def predict_neighbor_fcpi(history: NeighborHistory) -> Fcpi:
    """Predicted next health byte for this neighbor.

    Channels with no observations yet default to up: an unknown neighbor
    should look no worse than the blind baseline assumes.
    """
    bits = []
    for ch in range(fcpi.NUM_CHANNELS):
        seq = history.observed[ch]
        if not seq:
            bits.append(1)
            continue
        symbol, _ = hmm.predict_next_symbol(history.models[ch], seq)
        bits.append(symbol)
    return fcpi.pack_bits(bits)


class RankedHop(NamedTuple):
    neighbor_id: int
    predicted_fcpi: Fcpi
    required_channel_up: bool


@dataclass(eq=False)
class Advice:
    """Advisor output: candidates ranked best-first plus the pick, if any.

    ranked_candidates holds the input (neighbor, required_channel) pairs
    in the same order as ranked_hops, so callers can walk alternates.
    """

    ranked_hops: list[RankedHop]
    chosen: Optional[int]
    ranked_candidates: list[tuple[int, Optional[int]]] = field(
        default_factory=list)


def advise(predictions: Mapping[int, Fcpi],
           candidates: Sequence[tuple[int, Optional[int]]],
           hop_costs: Optional[Mapping[int, float]] = None,
           planner=None) -> Advice:
    """Rank candidate next hops by predicted onward-channel health.

    Candidates whose required channel is predicted up come first; within
    each group the order is (hop cost ascending, neighbor id ascending).
    A candidate with no required channel (a terminal hop) counts as up,
    as does a neighbor with no prediction. `planner` is a reserved slot
    for a resource-planning stage and must currently be None.
    """
    if planner is not None:
        raise NotImplementedError("planning input is not supported yet")
    costs = hop_costs or {}

    def key(item):
        idx, (neighbor, _channel) = item
        return (costs.get(neighbor, float("inf")), neighbor, idx)

    scored = []
    for idx, cand in enumerate(candidates):
        neighbor, channel = cand
        predicted = predictions.get(neighbor, OPTIMISTIC_FCPI)
        up = True if channel is None else fcpi.channel_up(predicted, channel)
        scored.append((up, predicted, idx, cand))

    up_items = sorted([(i, c) for up, _, i, c in scored if up], key=key)
    down_items = sorted([(i, c) for up, _, i, c in scored if not up], key=key)

    ranked_hops = []
    ranked_candidates = []
    for idx, cand in up_items + down_items:
        up, predicted, _, _ = scored[idx]
        ranked_hops.append(RankedHop(cand[0], predicted, up))
        ranked_candidates.append(cand)
    chosen = up_items[0][1][0] if up_items else None
    return Advice(ranked_hops=ranked_hops, chosen=chosen,
                  ranked_candidates=ranked_candidates)


class CognitiveDomain:
    """Learner plus advisor for one router.

    Owns the per-neighbor histories built from ingested gossip packets
    and a cache of predicted health bytes, refreshed by the simulation
    whenever new observations or retrained models change them.
    """

    def __init__(self, owner_id: int, n_states: int = DEFAULT_HMM_STATES,
                 window: int = DEFAULT_WINDOW, em_iters: int = 5,
                 tol: float = 1e-4, seed: int = 0):
        self.owner_id = owner_id
        self.n_states = n_states
        self.window = window
        self.em_iters = em_iters
        self.tol = tol
        self.seed = seed
        self.store: dict[int, NeighborHistory] = {}
        self.predictions: dict[int, Fcpi] = {}

    def ingest(self, pkt: CognitivePacket) -> None:
        ingest_cognitive_packet(self.store, pkt, n_states=self.n_states,
                                window=self.window, seed=self.seed)

    def histories(self) -> list[NeighborHistory]:
        return [self.store[k] for k in sorted(self.store)]

    def predict(self, neighbor_id: int) -> Fcpi:
        history = self.store.get(neighbor_id)
        if history is None:
            return OPTIMISTIC_FCPI
        return predict_neighbor_fcpi(history)

    def advise(self, candidates, hop_costs=None) -> Advice:
        return advise(self.predictions, candidates, hop_costs)


# --- batched refresh helpers used by the simulator -------------------------

def _stack_lanes(histories: Iterable[NeighborHistory]):
    """Group (history, channel) lanes by sequence length.

    Returns {length: (refs, transitions, emissions, initials, obs)} where
    refs is a list of (history, channel) pairs aligned with the lane axis.
    """
    by_len: dict[int, list[tuple[NeighborHistory, int]]] = {}
    for history in histories:
        t_len = history.length()
        for ch in range(fcpi.NUM_CHANNELS):
            by_len.setdefault(t_len, []).append((history, ch))
    groups = {}
    for t_len, refs in by_len.items():
        transitions = np.stack([h.models[ch].transition for h, ch in refs])
        emissions = np.stack([h.models[ch].emission for h, ch in refs])
        initials = np.stack([h.models[ch].initial for h, ch in refs])
        obs = (np.array([h.observed[ch] for h, ch in refs], dtype=np.int64)
               if t_len > 0 else np.zeros((len(refs), 0), dtype=np.int64))
        groups[t_len] = (refs, transitions, emissions, initials, obs)
    return groups


def retrain_many(histories: Sequence[NeighborHistory],
                 window: int = DEFAULT_WINDOW, em_iters: int = 5,
                 tol: float = 1e-4) -> None:
    """Vectorized equivalent of calling retrain() on every history."""
    for t_len, group in _stack_lanes(histories).items():
        refs, transitions, emissions, initials, obs = group
        if t_len < 2:
            continue
        if t_len > window:
            obs = obs[:, -window:]
        transitions, emissions, initials = hmm.baum_welch_batch(
            transitions, emissions, initials, obs,
            max_iters=em_iters, tol=tol)
        for lane, (history, ch) in enumerate(refs):
            model = history.models[ch]
            history.models[ch] = hmm.HmmModel(
                n_states=model.n_states, n_symbols=model.n_symbols,
                transition=transitions[lane], emission=emissions[lane],
                initial=initials[lane])


def predict_many(histories: Sequence[NeighborHistory]) -> dict[int, Fcpi]:
    """Vectorized equivalent of predict_neighbor_fcpi() per history.

    Returns {neighbor_id: predicted byte} over the given histories.
    """
    bits: dict[int, list[int]] = {
        h.neighbor_id: [1] * fcpi.NUM_CHANNELS for h in histories}
    for t_len, group in _stack_lanes(histories).items():
        refs, transitions, emissions, initials, obs = group
        if t_len == 0:
            continue
        filtered, _ = hmm.filter_batch(transitions, emissions, initials, obs)
        symbols, _ = hmm.predict_from_filtered(transitions, emissions,
                                               filtered)
        for lane, (history, ch) in enumerate(refs):
            bits[history.neighbor_id][ch] = int(symbols[lane])
    return {nid: fcpi.pack_bits(b) for nid, b in bits.items()}
