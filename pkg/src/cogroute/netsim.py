"""Deterministic epoch-stepped network simulator.

Every epoch runs a fixed phase order: channel dynamics advance, routers
gossip and learn, traffic is injected, queued packets make one forwarding
attempt each, and metrics accumulate. All randomness comes from named
per-purpose streams derived from the run seed, so identical inputs give
byte-identical reports and both routing modes face the same ground-truth
channel behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cognition, fcpi
from .cognition import CognitiveDomain
from .fcpi import ChannelMetrics
from .scenario import Candidate, Scenario

MODE_BLIND = "blind"
MODE_COGNITIVE = "cognitive"
MODE_COMPARE = "compare"

# Stream tags keep rng purposes independent of each other and of the mode.
_STREAM_DYNAMICS = 1
_STREAM_DELIVERY = 2
_STREAM_TRAFFIC = 3
_STREAM_COGNITION = 4


@dataclass
class DataPacket:
    id: int
    source: int
    destination: int
    created_epoch: int
    hops_taken: int = 0
    retransmissions: int = 0
    delivered: bool = False
    delay_ms: float = 0.0


@dataclass
class _QueueEntry:
    packet: DataPacket
    order: list[Candidate] | None = None
    position: int = 0
    attempts_on_current: int = 0


@dataclass
class ModeReport:
    """Per-mode outcome of one simulated run."""

    delivery_ratio: float
    mean_delay_ms: float
    total_retransmissions: int
    cognitive_bytes: int
    data_bytes: int
    prediction_bit_accuracy: float
    injected: int
    delivered: int
    dropped: int
    in_flight: int
    series: dict[str, list[int]] = field(default_factory=dict)


@dataclass
class SimReport:
    scenario_name: str
    epochs: int
    seed: int
    modes: dict[str, ModeReport]


class World:
    """One simulated network in one routing mode."""

    def __init__(self, scenario: Scenario, seed: int, mode: str):
        if mode not in (MODE_BLIND, MODE_COGNITIVE):
            raise ValueError(f"unknown mode {mode!r}")
        self.scenario = scenario
        self.params = scenario.params
        self.seed = seed
        self.mode = mode
        self.epoch = 0

        topo = scenario.topology
        self.routers = list(topo.routers)
        self.channels = list(topo.channels)
        self.channel_ids = [(c.from_router, c.channel_index)
                            for c in self.channels]
        self._by_id = dict(zip(self.channel_ids, self.channels))
        self.out_channels: dict[int, dict[int, object]] = {
            r: {} for r in self.routers}
        self.chan_to: dict[tuple[int, int], tuple[int, int]] = {}
        for c in self.channels:
            self.out_channels[c.from_router][c.channel_index] = c
            key = (c.from_router, c.to_router)
            if key not in self.chan_to:
                self.chan_to[key] = (c.from_router, c.channel_index)
        self.in_neighbors: dict[int, list[int]] = {r: [] for r in self.routers}
        for c in self.channels:
            self.in_neighbors[c.to_router].append(c.from_router)
        for r in self.routers:
            self.in_neighbors[r] = sorted(set(self.in_neighbors[r]))

        self._dyn_rng = {cid: np.random.default_rng(
            [seed, _STREAM_DYNAMICS, cid[0], cid[1]])
            for cid in self.channel_ids}
        self._delivery_rng = {cid: np.random.default_rng(
            [seed, _STREAM_DELIVERY, cid[0], cid[1]])
            for cid in self.channel_ids}
        self._traffic_rng = {
            (d.source, d.destination): np.random.default_rng(
                [seed, _STREAM_TRAFFIC, d.source, d.destination])
            for d in scenario.traffic}
        self._cum_rows = {
            cid: np.cumsum(np.asarray(scenario.dynamics[cid].transition),
                           axis=1)
            for cid in self.channel_ids}

        self.state: dict[tuple[int, int], int] = {
            cid: scenario.dynamics[cid].initial_state
            for cid in self.channel_ids}
        self.metrics: dict[tuple[int, int], ChannelMetrics] = {}
        self.state_log: dict[tuple[int, int], list[int]] = {
            cid: [] for cid in self.channel_ids}

        self.queues: dict[int, list[_QueueEntry]] = {r: [] for r in self.routers}
        self.domains: dict[int, CognitiveDomain] = {}
        if mode == MODE_COGNITIVE:
            p = self.params
            for r in self.routers:
                domain_seed = int(np.random.SeedSequence(
                    [seed, _STREAM_COGNITION, r]).generate_state(1)[0])
                self.domains[r] = CognitiveDomain(
                    owner_id=r, n_states=p.hmm_states, window=p.window,
                    em_iters=p.em_iters, tol=p.tol, seed=domain_seed)

        self._next_packet_id = 0
        self.injected = 0
        self.delivered = 0
        self.dropped = 0
        self.total_retransmissions = 0
        self.cognitive_bytes = 0
        self.data_bytes = 0
        self.delay_sum_ms = 0.0
        self.bits_correct = 0
        self.bits_total = 0
        self.drop_reasons: dict[str, int] = {}
        self.decision_log: list[tuple[int, int, int, int]] = []
        self.series: dict[str, list[int]] = {
            "injected": [], "delivered": [], "dropped": [],
            "retransmissions": [], "cognitive_bytes": []}

    # -- phase 1: ground-truth channel dynamics ---------------------------

    def _advance_channels(self) -> None:
        for cid in self.channel_ids:
            rng = self._dyn_rng[cid]
            if self.epoch > 0:
                u = rng.random()
                row = self._cum_rows[cid][self.state[cid]]
                # Clamp guards against cumulative sums a hair below 1.0.
                self.state[cid] = min(
                    int(np.searchsorted(row, u, side="right")), len(row) - 1)
            state = self.scenario.dynamics[cid].states[self.state[cid]]
            channel = self._by_id[cid]
            delay = channel.base_delay_ms + rng.normal(
                state.delay_mean_ms, state.delay_std_ms)
            jitter = rng.normal(state.jitter_mean_ms, state.jitter_std_ms)
            self.metrics[cid] = ChannelMetrics(
                available_bandwidth_fraction=state.bandwidth_fraction,
                delay_ms=max(0.0, delay),
                jitter_ms=max(0.0, jitter),
                loss_fraction=state.loss)
            self.state_log[cid].append(self.state[cid])

    # -- phase 2+3: gossip, learning ---------------------------------------

    def router_fcpi(self, router: int) -> int:
        """The router's measured health byte for its own outgoing channels."""
        per_channel = [self.metrics.get((router, m + 1))
                       for m in range(fcpi.NUM_CHANNELS)]
        return fcpi.synthesize_fcpi(per_channel, self.params.thresholds)

    def _cognition_phase(self) -> None:
        if self.mode != MODE_COGNITIVE:
            return
        interval = self.params.cognitive_interval
        gossip_now = interval > 0 and self.epoch % interval == 0
        changed = False
        if gossip_now:
            round_index = self.epoch // interval
            for sender in self.routers:
                pkt = cognition.emit_cognitive_packet(
                    [self.metrics.get((sender, m + 1))
                     for m in range(fcpi.NUM_CHANNELS)],
                    self.params.thresholds, sender, round_index)
                wire = cognition.encode_packet(pkt)
                for receiver in self.in_neighbors[sender]:
                    self.cognitive_bytes += len(wire)
                    domain = self.domains[receiver]
                    predicted = domain.predictions.get(sender)
                    if predicted is not None:
                        xor = predicted ^ pkt.fcpi
                        self.bits_correct += 8 - bin(xor).count("1")
                        self.bits_total += 8
                    domain.ingest(cognition.decode_packet(wire))
            changed = True
        if (self.epoch > 0 and self.params.retrain_every > 0
                and self.epoch % self.params.retrain_every == 0):
            histories = [h for r in self.routers
                         for h in self.domains[r].histories()]
            if histories:
                cognition.retrain_many(histories, window=self.params.window,
                                       em_iters=self.params.em_iters,
                                       tol=self.params.tol)
                changed = True
        if changed:
            self._refresh_predictions()

    def _refresh_predictions(self) -> None:
        pairs = [(self.domains[r], h) for r in self.routers
                 for h in self.domains[r].histories()]
        if not pairs:
            return
        predicted = cognition.predict_many([h for _, h in pairs])
        for (domain, history), byte in zip(pairs, predicted):
            domain.predictions[history.neighbor_id] = byte

    # -- phase 4: traffic ---------------------------------------------------

    def _inject_traffic(self) -> int:
        injected_now = 0
        for demand in self.scenario.traffic:
            if demand.rate <= 0:
                continue
            count = int(self._traffic_rng[
                (demand.source, demand.destination)].poisson(demand.rate))
            for _ in range(count):
                packet = DataPacket(id=self._next_packet_id,
                                    source=demand.source,
                                    destination=demand.destination,
                                    created_epoch=self.epoch)
                self._next_packet_id += 1
                self.queues[demand.source].append(_QueueEntry(packet))
                self.injected += 1
                injected_now += 1
        return injected_now

    # -- phase 5+6: forwarding ----------------------------------------------

    def _drop(self, reason: str) -> None:
        self.dropped += 1
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1

    def _forward_phase(self) -> tuple[int, int]:
        delivered_now = 0
        dropped_now = 0
        arrivals: dict[int, list[_QueueEntry]] = {r: [] for r in self.routers}
        for router in self.routers:
            remaining: list[_QueueEntry] = []
            for entry in self.queues[router]:
                packet = entry.packet
                if entry.order is None:
                    entry.order = (route_cognitive(self, router, packet)
                                   if self.mode == MODE_COGNITIVE
                                   else route_blind(self, router, packet))
                    entry.position = 0
                    entry.attempts_on_current = 0
                if not entry.order:
                    self._drop("no_candidates")
                    dropped_now += 1
                    continue
                if packet.hops_taken >= self.params.ttl:
                    self._drop("ttl_exhausted")
                    dropped_now += 1
                    continue

                candidate = entry.order[entry.position]
                cid = self.chan_to.get((router, candidate.neighbor))
                if cid is None:
                    # Candidate tables are validated, so this is unreachable
                    # for loaded scenarios; guard anyway.
                    self._drop("no_channel")
                    dropped_now += 1
                    continue
                self.decision_log.append(
                    (self.epoch, router, packet.id, candidate.neighbor))
                metrics = self.metrics[cid]
                self.data_bytes += self.params.data_packet_bytes
                packet.delay_ms += metrics.delay_ms
                success = self._delivery_rng[cid].random() >= metrics.loss_fraction
                if success:
                    packet.hops_taken += 1
                    if candidate.neighbor == packet.destination:
                        packet.delivered = True
                        self.delivered += 1
                        delivered_now += 1
                        self.delay_sum_ms += packet.delay_ms
                    else:
                        arrivals[candidate.neighbor].append(
                            _QueueEntry(packet))
                else:
                    packet.retransmissions += 1
                    self.total_retransmissions += 1
                    entry.attempts_on_current += 1
                    if entry.attempts_on_current > self.params.retry_limit:
                        entry.position += 1
                        entry.attempts_on_current = 0
                        if entry.position >= len(entry.order):
                            self._drop("candidates_exhausted")
                            dropped_now += 1
                            continue
                    remaining.append(entry)
            self.queues[router] = remaining
        for router, new_entries in arrivals.items():
            self.queues[router].extend(new_entries)
        return delivered_now, dropped_now

    # -- main loop ----------------------------------------------------------

    def step(self) -> None:
        cog_before = self.cognitive_bytes
        retx_before = self.total_retransmissions
        self._advance_channels()
        self._cognition_phase()
        injected_now = self._inject_traffic()
        delivered_now, dropped_now = self._forward_phase()
        self.series["injected"].append(injected_now)
        self.series["delivered"].append(delivered_now)
        self.series["dropped"].append(dropped_now)
        self.series["retransmissions"].append(
            self.total_retransmissions - retx_before)
        self.series["cognitive_bytes"].append(
            self.cognitive_bytes - cog_before)
        self.epoch += 1

    def in_flight(self) -> int:
        return sum(len(q) for q in self.queues.values())

    def report(self) -> ModeReport:
        delivery_ratio = (self.delivered / self.injected
                          if self.injected else 0.0)
        mean_delay = (self.delay_sum_ms / self.delivered
                      if self.delivered else 0.0)
        accuracy = (self.bits_correct / self.bits_total
                    if self.bits_total else float("nan"))
        return ModeReport(
            delivery_ratio=delivery_ratio,
            mean_delay_ms=mean_delay,
            total_retransmissions=self.total_retransmissions,
            cognitive_bytes=self.cognitive_bytes,
            data_bytes=self.data_bytes,
            prediction_bit_accuracy=accuracy,
            injected=self.injected,
            delivered=self.delivered,
            dropped=self.dropped,
            in_flight=self.in_flight(),
            series={k: list(v) for k, v in self.series.items()})


def step_epoch(world: World) -> World:
    """Advance the world by one epoch and return it."""
    world.step()
    return world


def route_blind(world: World, router: int, packet: DataPacket
                ) -> list[Candidate]:
    """Baseline candidate order: exactly as configured."""
    return list(world.scenario.topology.candidates
                .get(router, {}).get(packet.destination, []))


def route_cognitive(world: World, router: int, packet: DataPacket
                    ) -> list[Candidate]:
    """Candidate order from the advisor's predicted-health ranking.

    Candidate position doubles as its hop cost, so with no predictions the
    ranking degrades to exactly the blind order. If no candidate is
    predicted up, fall back to the blind order rather than dropping.
    """
    candidates = route_blind(world, router, packet)
    if not candidates:
        return []
    domain = world.domains[router]
    costs: dict[int, float] = {}
    for position, candidate in enumerate(candidates):
        costs.setdefault(candidate.neighbor, float(position))
    advice = domain.advise(candidates, costs)
    if advice.chosen is None:
        return candidates
    return [Candidate(*c) for c in advice.ranked_candidates]


def run(scenario: Scenario, epochs: int, seed: int, mode: str) -> SimReport:
    """Simulate `epochs` epochs and report per-mode metrics.

    In compare mode both routing modes run over identical seeds, so they
    face the same ground-truth channel trajectories and the same traffic.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if mode == MODE_COMPARE:
        mode_list = [MODE_BLIND, MODE_COGNITIVE]
    elif mode in (MODE_BLIND, MODE_COGNITIVE):
        mode_list = [mode]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    modes: dict[str, ModeReport] = {}
    for m in mode_list:
        world = World(scenario, seed, m)
        for _ in range(epochs):
            world.step()
        modes[m] = world.report()
    return SimReport(scenario_name=scenario.name, epochs=epochs, seed=seed,
                     modes=modes)


# -- report serialization ----------------------------------------------------

CSV_HEADER = ("mode,seed,delivery_ratio,mean_delay_ms,retransmissions,"
              "cognitive_bytes,data_bytes,prediction_bit_accuracy")


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


def csv_rows(report: SimReport) -> list[str]:
    rows = []
    for mode in sorted(report.modes):
        r = report.modes[mode]
        rows.append(",".join([
            mode, str(report.seed), _fmt(r.delivery_ratio),
            _fmt(r.mean_delay_ms), str(r.total_retransmissions),
            str(r.cognitive_bytes), str(r.data_bytes),
            _fmt(r.prediction_bit_accuracy)]))
    return rows


def report_payload(report: SimReport) -> dict:
    """JSON-ready dict with summary fields and per-epoch series."""
    runs = []
    for mode in sorted(report.modes):
        r = report.modes[mode]
        runs.append({
            "mode": mode,
            "seed": report.seed,
            "summary": {
                "delivery_ratio": r.delivery_ratio,
                "mean_delay_ms": r.mean_delay_ms,
                "retransmissions": r.total_retransmissions,
                "cognitive_bytes": r.cognitive_bytes,
                "data_bytes": r.data_bytes,
                "prediction_bit_accuracy": (
                    None if math.isnan(r.prediction_bit_accuracy)
                    else r.prediction_bit_accuracy),
                "injected": r.injected,
                "delivered": r.delivered,
                "dropped": r.dropped,
                "in_flight": r.in_flight,
            },
            "series": r.series,
        })
    return {"scenario": report.scenario_name, "epochs": report.epochs,
            "runs": runs}
