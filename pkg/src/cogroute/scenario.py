"""Scenario files: topology, channel dynamics, traffic and run parameters.

A scenario is a single JSON document with sections `routers`, `channels`
(each carrying its own hidden-quality dynamics), `candidates`, `traffic`
and `params`. Loading validates everything and reports all problems at
once, each tagged with the router or channel it concerns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

from .fcpi import NUM_CHANNELS, QosThresholds

ROW_SUM_TOL = 1e-9
NUM_QUALITY_STATES = 3


class ScenarioError(Exception):
    """Carries every validation error found in a scenario document."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class QualityState:
    """Metric levels while the channel sits in one hidden quality state."""

    name: str
    bandwidth_fraction: float
    loss: float
    delay_mean_ms: float
    delay_std_ms: float
    jitter_mean_ms: float
    jitter_std_ms: float


@dataclass(frozen=True)
class ChannelDynamics:
    """Hidden 3-state quality chain driving a channel's metrics."""

    transition: tuple[tuple[float, ...], ...]
    states: tuple[QualityState, ...]
    initial_state: int = 0


@dataclass(frozen=True)
class Channel:
    from_router: int
    channel_index: int
    to_router: int
    capacity_mbps: float
    base_delay_ms: float


class Candidate(NamedTuple):
    """A next-hop option: the neighbor and, unless the hop is terminal,
    the neighbor's outgoing channel the route needs next."""

    neighbor: int
    required_channel: Optional[int]


@dataclass
class Topology:
    routers: list[int]
    channels: list[Channel]
    candidates: dict[int, dict[int, list[Candidate]]]


@dataclass(frozen=True)
class TrafficDemand:
    source: int
    destination: int
    rate: float  # mean packets per epoch (Poisson)


@dataclass(frozen=True)
class SimParams:
    cognitive_interval: int = 5  # 0 disables gossip entirely
    retrain_every: int = 10
    window: int = 200
    em_iters: int = 5
    tol: float = 1e-4
    hmm_states: int = 3
    retry_limit: int = 2
    ttl: int = 16
    max_candidates: int = 3
    data_packet_bytes: int = 1024
    thresholds: QosThresholds = field(default_factory=QosThresholds)


class Scenario(NamedTuple):
    topology: Topology
    dynamics: dict[tuple[int, int], ChannelDynamics]
    traffic: list[TrafficDemand]
    params: SimParams
    name: str = "scenario"


def _parse_dynamics(raw: dict, where: str, errors: list[str]
                    ) -> Optional[ChannelDynamics]:
    states_raw = raw.get("states")
    transition = raw.get("transition")
    if not isinstance(states_raw, list) or len(states_raw) != NUM_QUALITY_STATES:
        errors.append(f"{where}: dynamics must define exactly "
                      f"{NUM_QUALITY_STATES} quality states")
        return None
    if (not isinstance(transition, list)
            or len(transition) != NUM_QUALITY_STATES
            or any(not isinstance(row, list) or len(row) != NUM_QUALITY_STATES
                   for row in transition)):
        errors.append(f"{where}: transition must be a "
                      f"{NUM_QUALITY_STATES}x{NUM_QUALITY_STATES} matrix")
        return None

    ok = True
    for i, row in enumerate(transition):
        if any(not isinstance(p, (int, float)) or p < 0 or p > 1 for p in row):
            errors.append(f"{where}: transition row {i} has entries "
                          "outside [0, 1]")
            ok = False
            continue
        if abs(sum(row) - 1.0) > ROW_SUM_TOL:
            errors.append(f"{where}: transition row {i} sums to "
                          f"{sum(row):.6f}, expected 1")
            ok = False

    states = []
    for i, s in enumerate(states_raw):
        try:
            state = QualityState(
                name=str(s.get("name", f"state{i}")),
                bandwidth_fraction=float(s["bandwidth_fraction"]),
                loss=float(s["loss"]),
                delay_mean_ms=float(s["delay_mean_ms"]),
                delay_std_ms=float(s.get("delay_std_ms", 0.0)),
                jitter_mean_ms=float(s["jitter_mean_ms"]),
                jitter_std_ms=float(s.get("jitter_std_ms", 0.0)),
            )
        except (KeyError, TypeError, ValueError):
            errors.append(f"{where}: quality state {i} is malformed")
            ok = False
            continue
        if not 0.0 <= state.loss <= 1.0:
            errors.append(f"{where}: state {state.name} loss outside [0, 1]")
            ok = False
        if not 0.0 <= state.bandwidth_fraction <= 1.0:
            errors.append(f"{where}: state {state.name} bandwidth_fraction "
                          "outside [0, 1]")
            ok = False
        if (state.delay_mean_ms < 0 or state.delay_std_ms < 0
                or state.jitter_mean_ms < 0 or state.jitter_std_ms < 0):
            errors.append(f"{where}: state {state.name} has negative "
                          "delay/jitter parameters")
            ok = False
        states.append(state)

    initial_state = raw.get("initial_state", 0)
    if not isinstance(initial_state, int) or not 0 <= initial_state < NUM_QUALITY_STATES:
        errors.append(f"{where}: initial_state must be in "
                      f"[0, {NUM_QUALITY_STATES - 1}]")
        ok = False
    if not ok or len(states) != NUM_QUALITY_STATES:
        return None
    return ChannelDynamics(
        transition=tuple(tuple(float(p) for p in row) for row in transition),
        states=tuple(states), initial_state=initial_state)


def _parse_params(raw: dict, errors: list[str]) -> SimParams:
    defaults = SimParams()
    thresholds = defaults.thresholds
    if "thresholds" in raw:
        try:
            thresholds = QosThresholds(**raw["thresholds"])
        except (TypeError, ValueError) as exc:
            errors.append(f"params.thresholds: {exc}")

    def geti(key, default, minimum):
        value = raw.get(key, default)
        if value is None and key == "cognitive_interval":
            return 0
        if not isinstance(value, int) or value < minimum:
            errors.append(f"params.{key}: must be an integer >= {minimum}")
            return default
        return value

    tol = raw.get("tol", defaults.tol)
    if not isinstance(tol, (int, float)) or tol <= 0:
        errors.append("params.tol: must be positive")
        tol = defaults.tol
    return SimParams(
        cognitive_interval=geti("cognitive_interval",
                                defaults.cognitive_interval, 0),
        retrain_every=geti("retrain_every", defaults.retrain_every, 1),
        window=geti("window", defaults.window, 2),
        em_iters=geti("em_iters", defaults.em_iters, 1),
        tol=float(tol),
        hmm_states=geti("hmm_states", defaults.hmm_states, 1),
        retry_limit=geti("retry_limit", defaults.retry_limit, 0),
        ttl=geti("ttl", defaults.ttl, 1),
        max_candidates=geti("max_candidates", defaults.max_candidates, 1),
        data_packet_bytes=geti("data_packet_bytes",
                               defaults.data_packet_bytes, 1),
        thresholds=thresholds,
    )


def parse_scenario(doc: dict, name: str = "scenario") -> Scenario:
    """Validate a parsed scenario document; raises ScenarioError with every
    problem found."""
    errors: list[str] = []

    routers_raw = doc.get("routers")
    if not isinstance(routers_raw, list) or not routers_raw:
        raise ScenarioError(["routers: must be a non-empty list of ids"])
    routers: list[int] = []
    for r in routers_raw:
        if not isinstance(r, int) or not 0 <= r <= 0xFFFF:
            errors.append(f"routers: id {r!r} must be an integer in [0, 65535]")
        else:
            routers.append(r)
    if len(set(routers)) != len(routers):
        errors.append("routers: ids must be unique")
    router_set = set(routers)

    params = _parse_params(doc.get("params", {}), errors)

    channels: list[Channel] = []
    dynamics: dict[tuple[int, int], ChannelDynamics] = {}
    seen_idx: set[tuple[int, int]] = set()
    by_endpoints: dict[tuple[int, int], int] = {}
    for raw in doc.get("channels", []):
        try:
            frm = int(raw["from"])
            idx = int(raw["channel"])
            to = int(raw["to"])
        except (KeyError, TypeError, ValueError):
            errors.append(f"channels: entry {raw!r} is malformed")
            continue
        where = f"channel {frm}/{idx}"
        if frm not in router_set:
            errors.append(f"{where}: unknown router id {frm}")
        if to not in router_set:
            errors.append(f"{where}: unknown router id {to}")
        if not 1 <= idx <= NUM_CHANNELS:
            errors.append(f"{where}: channel index must be in [1, {NUM_CHANNELS}]")
        if (frm, idx) in seen_idx:
            errors.append(f"{where}: duplicate channel index on router {frm}")
        seen_idx.add((frm, idx))
        by_endpoints[(frm, to)] = by_endpoints.get((frm, to), 0) + 1
        dyn = _parse_dynamics(raw.get("dynamics", {}), where, errors)
        if dyn is not None:
            dynamics[(frm, idx)] = dyn
        channels.append(Channel(
            from_router=frm, channel_index=idx, to_router=to,
            capacity_mbps=float(raw.get("capacity_mbps", 100.0)),
            base_delay_ms=float(raw.get("base_delay_ms", 1.0))))

    candidates: dict[int, dict[int, list[Candidate]]] = {}
    forward_channels = {(c.from_router, c.channel_index) for c in channels}
    for router_key, by_dest in (doc.get("candidates") or {}).items():
        try:
            router = int(router_key)
        except ValueError:
            errors.append(f"candidates: bad router key {router_key!r}")
            continue
        if router not in router_set:
            errors.append(f"candidates: unknown router id {router}")
            continue
        candidates[router] = {}
        for dest_key, entries in by_dest.items():
            try:
                dest = int(dest_key)
            except ValueError:
                errors.append(f"candidates[{router}]: bad destination key "
                              f"{dest_key!r}")
                continue
            where = f"candidates[{router}][{dest}]"
            if dest not in router_set:
                errors.append(f"{where}: unknown destination id {dest}")
                continue
            if not isinstance(entries, list) or not entries:
                errors.append(f"{where}: must be a non-empty list")
                continue
            if len(entries) > params.max_candidates:
                errors.append(f"{where}: {len(entries)} entries exceed "
                              f"max_candidates={params.max_candidates}")
            parsed: list[Candidate] = []
            for e in entries:
                try:
                    neighbor = int(e["neighbor"])
                    channel = e.get("channel")
                    channel = None if channel is None else int(channel)
                except (KeyError, TypeError, ValueError):
                    errors.append(f"{where}: entry {e!r} is malformed")
                    continue
                if neighbor not in router_set:
                    errors.append(f"{where}: unknown neighbor {neighbor}")
                    continue
                n_links = by_endpoints.get((router, neighbor), 0)
                if n_links == 0:
                    errors.append(f"{where}: router {router} has no channel "
                                  f"to neighbor {neighbor}")
                elif n_links > 1:
                    errors.append(f"{where}: router {router} has multiple "
                                  f"channels to neighbor {neighbor}; "
                                  "candidate is ambiguous")
                if channel is not None and (neighbor, channel) not in forward_channels:
                    errors.append(f"{where}: neighbor {neighbor} has no "
                                  f"outgoing channel {channel}")
                parsed.append(Candidate(neighbor, channel))
            candidates[router][dest] = parsed

    traffic: list[TrafficDemand] = []
    for raw in doc.get("traffic", []):
        try:
            src = int(raw["source"])
            dst = int(raw["destination"])
            rate = float(raw["rate"])
        except (KeyError, TypeError, ValueError):
            errors.append(f"traffic: entry {raw!r} is malformed")
            continue
        where = f"traffic {src}->{dst}"
        if src not in router_set or dst not in router_set:
            errors.append(f"{where}: unknown router id")
            continue
        if rate < 0:
            errors.append(f"{where}: rate must be >= 0")
            continue
        if src == dst:
            errors.append(f"{where}: source equals destination")
            continue
        if rate > 0 and dst not in candidates.get(src, {}):
            errors.append(f"{where}: source has no candidate table for this "
                          "destination")
        traffic.append(TrafficDemand(source=src, destination=dst, rate=rate))

    if errors:
        raise ScenarioError(errors)
    topology = Topology(routers=sorted(routers),
                        channels=sorted(channels, key=lambda c: (
                            c.from_router, c.channel_index)),
                        candidates=candidates)
    return Scenario(topology=topology, dynamics=dynamics, traffic=traffic,
                    params=params, name=name)


def load_scenario(path) -> Scenario:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError([f"scenario file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            [f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
             f"{exc.msg}"]) from None
    if not isinstance(doc, dict):
        raise ScenarioError([f"{path}: top level must be a JSON object"])
    return parse_scenario(doc, name=doc.get("name", path.stem))


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario JSON shipped with the package (e.g. 'default20')."""
    return Path(__file__).parent / "data" / f"{name}.json"
