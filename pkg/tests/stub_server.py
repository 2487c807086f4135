"""Minimal reference model server for exercising the bridge client.

Speaks the newline-delimited JSON protocol on stdio and answers conditional
queries by counting context rows directly; it shares no code with the
library, so agreement between a bridge run and an in-process run is a real
cross-implementation check. It reports the backend id "empirical" so that
rule files produced through it are byte-identical to in-process ones.

Env: STUB_ALPHA sets Laplace smoothing (default 0).
"""

import json
import os
import sys

ALPHA = float(os.environ.get("STUB_ALPHA", "0"))


class State:
    def __init__(self):
        self.columns = None
        self.rows = None
        self.classes = None
        self.labels = None


def hard_evidence(columns, probe):
    """(column index, category) pairs marked with an exact 1.0."""
    evidence = []
    pos = 0
    for j, col in enumerate(columns):
        cats = col["categories"]
        block = probe[pos : pos + len(cats)]
        for c, v in enumerate(block):
            if v == 1.0:
                evidence.append((j, cats[c]))
                break
        pos += len(cats)
    if pos != len(probe):
        raise ValueError(f"probe width {len(probe)} does not match schema width {pos}")
    return evidence


def predict_one(state, probe):
    evidence = hard_evidence(state.columns, probe)
    matches = [
        i
        for i, row in enumerate(state.rows)
        if all(row[j] == cat for j, cat in evidence)
    ]
    count_e = len(matches)
    counts = {c: 0 for c in state.classes}
    for i in matches:
        counts[state.labels[i]] += 1
    c = len(state.classes)
    if ALPHA > 0:
        return [(counts[cls] + ALPHA) / (count_e + ALPHA * c) for cls in state.classes]
    if count_e == 0:
        return None
    return [counts[cls] / count_e for cls in state.classes]


def handle(state, msg):
    op = msg.get("op")
    if op == "hello":
        if msg.get("version") != 1:
            return {"ok": False, "error": f"unsupported version {msg.get('version')}"}
        return {"ok": True, "name": "empirical"}
    if op == "fit":
        state.columns = msg["columns"]
        state.rows = msg["rows"]
        state.classes = msg["target_classes"]
        state.labels = msg["labels"]
        if len(state.rows) != len(state.labels):
            return {"ok": False, "error": "rows and labels differ in length"}
        return {"ok": True}
    if op == "predict":
        if state.rows is None:
            return {"ok": False, "error": "not fitted"}
        try:
            probs = [predict_one(state, probe) for probe in msg["rows"]]
        except (ValueError, KeyError, TypeError) as exc:
            return {"ok": False, "error": str(exc)}
        return {"ok": True, "probs": probs}
    if op == "shutdown":
        return {"ok": True, "_shutdown": True}
    return {"ok": False, "error": f"unknown op {op!r}"}


def main():
    state = State()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"ok": False, "error": f"invalid JSON: {exc}"}
            print(json.dumps(reply), flush=True)
            continue
        reply = handle(state, msg)
        shutdown = reply.pop("_shutdown", False)
        print(json.dumps(reply), flush=True)
        if shutdown:
            return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
