"""Client for external model servers speaking newline-delimited JSON on stdio.

The protocol, one JSON object per line, request strictly followed by its
response:

    -> {"op": "hello", "version": 1}
    <- {"ok": true, "name": "<backend id>"}
    -> {"op": "fit", "columns": [{"name": ..., "categories": [...]}, ...],
        "rows": [[<text cells>]], "target_classes": [...], "labels": [...]}
    <- {"ok": true}
    -> {"op": "predict", "rows": [[<numbers in [0,1]>]]}
    <- {"ok": true, "probs": [[<per-class>] | null, ...]}
    -> {"op": "shutdown"}
    <- {"ok": true}

Any {"ok": false, "error": ...} response aborts the current extraction with a
TransportError. A null row in "probs" means the query is undefined under the
server's estimator (zero-count evidence without smoothing). Numbers travel as
shortest round-trip decimals, so values cross the boundary bit-exactly.

The server holds one fitted context at a time: fitting invalidates handles
from earlier fits. One request is in flight per connection; the client locks
around each exchange.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from typing import Sequence

import numpy as np

from .data import ContextTable, FeatureDef, ReducedProbes
from .errors import TransportError

PROTOCOL_VERSION = 1


class BridgeModel:
    """Handle to the server's currently fitted context."""

    def __init__(self, backend: "BridgeBackend", generation: int, classes: tuple[str, ...], width: int):
        self._backend = backend
        self._generation = generation
        self._classes = classes
        self._width = width

    @property
    def classes(self) -> tuple[str, ...]:
        return self._classes

    def predict_proba(self, probes: ReducedProbes) -> np.ndarray:
        if probes.width != self._width:
            raise TransportError(
                f"probe width {probes.width} does not match fitted context width {self._width}"
            )
        return self._backend._predict(self._generation, probes, len(self._classes))


class BridgeBackend:
    """Spawns a model server process and drives it over the wire protocol."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise TransportError("empty bridge command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start bridge server: {exc}") from exc
        self._lock = threading.Lock()
        self._generation = 0
        self._closed = False
        try:
            reply = self._exchange({"op": "hello", "version": PROTOCOL_VERSION})
        except TransportError:
            self.close()
            raise
        self._name = str(reply.get("name", "bridge"))

    @property
    def name(self) -> str:
        return self._name

    def _exchange(self, message: dict) -> dict:
        with self._lock:
            if self._closed or self._proc.poll() is not None:
                raise TransportError("bridge server is not running")
            try:
                self._proc.stdin.write(json.dumps(message) + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise TransportError(f"bridge server connection lost: {exc}") from exc
            if not line:
                raise TransportError("bridge server closed the connection")
            try:
                reply = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TransportError(f"bridge server sent invalid JSON: {exc}") from exc
            if not isinstance(reply, dict) or "ok" not in reply:
                raise TransportError("bridge server reply lacks an 'ok' field")
            if not reply["ok"]:
                raise TransportError(
                    f"bridge server error: {reply.get('error', 'unknown error')}"
                )
            return reply

    def fit_context(
        self, context: ContextTable, labels: Sequence[str], target: FeatureDef
    ) -> BridgeModel:
        present = set(labels)
        classes = tuple(c for c in target.categories if c in present)
        message = {
            "op": "fit",
            "columns": [
                {"name": f.name, "categories": list(f.categories)}
                for f in context.features
            ],
            "rows": context.rows_text(),
            "target_classes": list(classes),
            "labels": list(labels),
        }
        self._exchange(message)
        self._generation += 1
        width = sum(f.cardinality for f in context.features)
        return BridgeModel(self, self._generation, classes, width)

    def _predict(self, generation: int, probes: ReducedProbes, n_classes: int) -> np.ndarray:
        if generation != self._generation:
            raise TransportError("stale context handle: the server was refitted")
        reply = self._exchange(
            {"op": "predict", "rows": probes.values.tolist()}
        )
        rows = reply.get("probs")
        if not isinstance(rows, list) or len(rows) != probes.n_rows:
            raise TransportError("bridge server returned a malformed 'probs' payload")
        out = np.empty((probes.n_rows, n_classes), dtype=np.float64)
        for r, row in enumerate(rows):
            if row is None:
                out[r] = np.nan
                continue
            if not isinstance(row, list) or len(row) != n_classes:
                raise TransportError(
                    f"probs row {r} has {len(row) if isinstance(row, list) else 'no'} "
                    f"entries, expected {n_classes}"
                )
            out[r] = [float(v) for v in row]
        return out

    def close(self) -> None:
        """Ask the server to shut down, then reap it; never blocks on a reply."""
        if self._closed:
            return
        self._closed = True
        proc = self._proc
        try:
            if proc.poll() is None:
                proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            pass
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "BridgeBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
