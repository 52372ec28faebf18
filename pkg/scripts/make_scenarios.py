#!/usr/bin/env python3
"""Regenerate the bundled scenario files under src/cogroute/data/.

The default 20-router scenario is a three-tier topology: four traffic
sources, four 8-channel hub routers, eight mid relays and four sinks.
The hub-to-mid links churn through good/degraded/bad quality states, so
a source that tracks each hub's gossiped health byte can steer around
hubs whose onward channel is down; everything else stays calm. The
5-router scenario is a minimal two-path variant used by fast tests.
"""

import json
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "cogroute" / "data"

STABLE = {
    "initial_state": 0,
    "transition": [[0.98, 0.015, 0.005],
                   [0.30, 0.65, 0.05],
                   [0.20, 0.20, 0.60]],
    "states": [
        {"name": "good", "bandwidth_fraction": 1.0, "loss": 0.005,
         "delay_mean_ms": 4.0, "delay_std_ms": 0.8,
         "jitter_mean_ms": 0.8, "jitter_std_ms": 0.2},
        {"name": "degraded", "bandwidth_fraction": 0.9, "loss": 0.02,
         "delay_mean_ms": 9.0, "delay_std_ms": 1.5,
         "jitter_mean_ms": 2.0, "jitter_std_ms": 0.5},
        {"name": "bad", "bandwidth_fraction": 0.8, "loss": 0.08,
         "delay_mean_ms": 18.0, "delay_std_ms": 3.0,
         "jitter_mean_ms": 4.0, "jitter_std_ms": 1.0},
    ],
}

VOLATILE = {
    "initial_state": 0,
    "transition": [[0.96, 0.03, 0.01],
                   [0.10, 0.85, 0.05],
                   [0.03, 0.05, 0.92]],
    "states": [
        {"name": "good", "bandwidth_fraction": 1.0, "loss": 0.02,
         "delay_mean_ms": 8.0, "delay_std_ms": 1.5,
         "jitter_mean_ms": 1.5, "jitter_std_ms": 0.4},
        {"name": "degraded", "bandwidth_fraction": 0.75, "loss": 0.30,
         "delay_mean_ms": 25.0, "delay_std_ms": 4.0,
         "jitter_mean_ms": 6.0, "jitter_std_ms": 1.0},
        {"name": "bad", "bandwidth_fraction": 0.30, "loss": 1.0,
         "delay_mean_ms": 70.0, "delay_std_ms": 8.0,
         "jitter_mean_ms": 18.0, "jitter_std_ms": 3.0},
    ],
}

MILD = {
    "initial_state": 0,
    "transition": [[0.95, 0.04, 0.01],
                   [0.15, 0.80, 0.05],
                   [0.05, 0.10, 0.85]],
    "states": [
        {"name": "good", "bandwidth_fraction": 1.0, "loss": 0.01,
         "delay_mean_ms": 6.0, "delay_std_ms": 1.0,
         "jitter_mean_ms": 1.0, "jitter_std_ms": 0.3},
        {"name": "degraded", "bandwidth_fraction": 0.85, "loss": 0.20,
         "delay_mean_ms": 15.0, "delay_std_ms": 2.5,
         "jitter_mean_ms": 3.0, "jitter_std_ms": 0.8},
        {"name": "bad", "bandwidth_fraction": 0.5, "loss": 0.50,
         "delay_mean_ms": 40.0, "delay_std_ms": 6.0,
         "jitter_mean_ms": 10.0, "jitter_std_ms": 2.0},
    ],
}


def channel(frm, idx, to, dynamics, capacity=100.0, base_delay=2.0):
    return {"from": frm, "channel": idx, "to": to,
            "capacity_mbps": capacity, "base_delay_ms": base_delay,
            "dynamics": dynamics}


def default20():
    sources = [1, 2, 3, 4]
    hubs = [5, 6, 7, 8]
    mids = list(range(9, 17))
    sinks = [17, 18, 19, 20]
    routers = sources + hubs + mids + sinks

    channels = []
    # Sources reach three hubs each over calm links.
    source_hubs = {1: [5, 6, 7], 2: [6, 7, 8], 3: [7, 8, 5], 4: [8, 5, 6]}
    for s, hub_list in source_hubs.items():
        for i, h in enumerate(hub_list, start=1):
            channels.append(channel(s, i, h, STABLE))

    # Hubs: channels 1-4 are churny primaries into mids, 5-6 are milder
    # backups, 7 crosses to the next hub, 8 reaches a spare mid. Exactly
    # eight channels per hub.
    hub_plan = {
        5: {1: (9, VOLATILE), 2: (10, VOLATILE), 3: (11, VOLATILE),
            4: (12, VOLATILE), 5: (13, MILD), 6: (14, MILD),
            7: (6, STABLE), 8: (15, MILD)},
        6: {1: (10, VOLATILE), 2: (11, VOLATILE), 3: (12, VOLATILE),
            4: (9, VOLATILE), 5: (14, MILD), 6: (13, MILD),
            7: (7, STABLE), 8: (16, MILD)},
        7: {1: (11, VOLATILE), 2: (12, VOLATILE), 3: (9, VOLATILE),
            4: (10, VOLATILE), 5: (15, MILD), 6: (16, MILD),
            7: (8, STABLE), 8: (13, MILD)},
        8: {1: (12, VOLATILE), 2: (9, VOLATILE), 3: (10, VOLATILE),
            4: (11, VOLATILE), 5: (16, MILD), 6: (15, MILD),
            7: (5, STABLE), 8: (14, MILD)},
    }
    for h, plan in hub_plan.items():
        for idx, (to, dyn) in plan.items():
            channels.append(channel(h, idx, to, dyn))

    # Mids each serve two sinks over calm links.
    mid_sinks = {9: [17, 18], 10: [18, 19], 11: [19, 20], 12: [20, 17],
                 13: [17, 19], 14: [18, 20], 15: [19, 17], 16: [20, 18]}
    for m, sink_list in mid_sinks.items():
        for i, sk in enumerate(sink_list, start=1):
            channels.append(channel(m, i, sk, STABLE))

    # Which mid reaches which sink, and through which hub channel.
    hub_channel_to_mid = {h: {to: idx for idx, (to, _) in plan.items()}
                          for h, plan in hub_plan.items()}
    mid_channel_to_sink = {m: {sk: i for i, sk in enumerate(sinks_, start=1)}
                           for m, sinks_ in mid_sinks.items()}

    def hub_routes(h, sink):
        """Candidate list at hub h for a sink: primary churny mid first,
        then a milder backup mid."""
        plan = hub_plan[h]
        primary = [(idx, to) for idx, (to, dyn) in plan.items()
                   if dyn is VOLATILE and sink in mid_sinks[to]]
        backup = [(idx, to) for idx, (to, dyn) in plan.items()
                  if dyn is MILD and sink in mid_sinks[to]]
        primary.sort()
        backup.sort()
        picks = primary[:1] + backup[:1]
        return [{"neighbor": to, "channel": mid_channel_to_sink[to][sink]}
                for _, to in picks]

    candidates = {}
    for m, sink_list in mid_sinks.items():
        candidates[str(m)] = {str(sk): [{"neighbor": sk, "channel": None}]
                              for sk in sink_list}

    demands = [(1, 17, 0.8), (2, 18, 0.8), (3, 19, 0.8), (4, 20, 0.8),
               (1, 19, 0.4), (3, 17, 0.4)]
    for h in hubs:
        candidates.setdefault(str(h), {})
        for sink in sinks:
            routes = hub_routes(h, sink)
            if routes:
                candidates[str(h)][str(sink)] = routes
    for s, sink, _rate in demands:
        entries = []
        for h in source_hubs[s]:
            routes = hub_routes(h, sink)
            if not routes:
                continue
            # The stretched check at the source watches the hub's primary
            # onward channel for this sink.
            primary_mid = routes[0]["neighbor"]
            entries.append({"neighbor": h,
                            "channel": hub_channel_to_mid[h][primary_mid]})
        candidates.setdefault(str(s), {})[str(sink)] = entries[:3]

    traffic = [{"source": s, "destination": d, "rate": r}
               for s, d, r in demands]

    return {
        "name": "default20",
        "routers": routers,
        "channels": channels,
        "candidates": candidates,
        "traffic": traffic,
        "params": {
            "cognitive_interval": 5,
            "retrain_every": 20,
            "window": 200,
            "em_iters": 3,
            "tol": 1e-3,
            "hmm_states": 3,
            "retry_limit": 2,
            "ttl": 16,
            "max_candidates": 3,
            "data_packet_bytes": 1500,
            "thresholds": {"min_bandwidth_fraction": 0.7,
                           "max_delay_ms": 50.0,
                           "max_jitter_ms": 10.0,
                           "max_loss_fraction": 0.05},
        },
    }


def small5():
    return {
        "name": "small5",
        "routers": [1, 2, 3, 4, 5],
        "channels": [
            channel(1, 1, 2, STABLE),
            channel(1, 2, 3, STABLE),
            channel(2, 1, 4, VOLATILE),
            channel(2, 2, 5, STABLE),
            channel(3, 1, 4, STABLE),
            channel(5, 1, 4, STABLE),
        ],
        "candidates": {
            "1": {"4": [{"neighbor": 2, "channel": 1},
                        {"neighbor": 3, "channel": 1}]},
            "2": {"4": [{"neighbor": 4, "channel": None},
                        {"neighbor": 5, "channel": 1}]},
            "3": {"4": [{"neighbor": 4, "channel": None}]},
            "5": {"4": [{"neighbor": 4, "channel": None}]},
        },
        "traffic": [{"source": 1, "destination": 4, "rate": 0.5}],
        "params": {
            "cognitive_interval": 5,
            "retrain_every": 20,
            "window": 200,
            "em_iters": 3,
            "tol": 1e-3,
            "hmm_states": 3,
            "retry_limit": 2,
            "ttl": 16,
            "max_candidates": 3,
            "data_packet_bytes": 1500,
            "thresholds": {"min_bandwidth_fraction": 0.7,
                           "max_delay_ms": 50.0,
                           "max_jitter_ms": 10.0,
                           "max_loss_fraction": 0.05},
        },
    }


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    for doc in (default20(), small5()):
        path = DATA_DIR / f"{doc['name']}.json"
        with path.open("w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
