"""Cross-boundary acceptance: extraction through the external model server.

Skipped entirely unless the TypeScript bridge server has been built
(bridge-server/dist/server.js); the primary suite never needs it.
"""

import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from probarm import (
    BridgeBackend,
    EmpiricalBackend,
    Thresholds,
    extract_rules_single_target,
)

from conftest import random_dataset
from test_acceptance import criterion

SERVER_JS = Path(__file__).parent.parent / "bridge-server" / "dist" / "server.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not SERVER_JS.exists(),
    reason="bridge server not built (run `npm run build` in bridge-server/)",
)

SERVER_CMD = f"node {SERVER_JS}"


def test_cross_boundary_equivalence():
    with criterion("cross-boundary equivalence (10 datasets via stdio server)"):
        rng = np.random.default_rng(123)
        for _ in range(10):
            _, _, _, dataset = random_dataset(rng, max_k=5, max_card=3, max_n=120)
            a = int(rng.integers(1, min(3, dataset.universe.k) + 1))
            tau_a = float(rng.choice([0.0, 0.3, 0.5, 0.8]))
            tau_c = float(rng.choice([0.5, 0.8, 1.0]))
            th = Thresholds(tau_a=tau_a, tau_c=tau_c, max_antecedents=a)
            local = extract_rules_single_target(dataset, EmpiricalBackend(), th)
            backend = BridgeBackend(SERVER_CMD)
            try:
                assert backend.name == "empirical-ref"
                remote = extract_rules_single_target(dataset, backend, th)
            finally:
                backend.close()
            assert local.structure() == remote.structure()
            assert [r.validity for r in local] == [r.validity for r in remote]
            assert remote.meta["fit_count"] == dataset.universe.k


def test_server_survives_protocol_abuse_from_python():
    with criterion("protocol fuzzing (server always answers ok:false)"):
        import json

        proc = subprocess.Popen(
            SERVER_CMD.split(),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        try:
            garbage = [
                "no json at all",
                '{"op": "predict", "rows": [[1, 0]]}',  # predict before fit
                '{"op": "noop"}',
                "[]",
                '{"op": "fit", "rows": 3}',
            ]
            for line in garbage:
                proc.stdin.write(line + "\n")
                proc.stdin.flush()
                reply = json.loads(proc.stdout.readline())
                assert reply["ok"] is False
                assert "error" in reply
            # still able to serve a real session afterwards
            proc.stdin.write('{"op": "hello", "version": 1}\n')
            proc.stdin.flush()
            reply = json.loads(proc.stdout.readline())
            assert reply == {"ok": True, "name": "empirical-ref"}
            proc.stdin.write('{"op": "shutdown"}\n')
            proc.stdin.flush()
            assert json.loads(proc.stdout.readline()) == {"ok": True}
            assert proc.wait(timeout=5) == 0
        finally:
            if proc.poll() is None:
                proc.kill()


def test_alpha_env_matches_in_process_smoothing(t1):
    with criterion("bridge smoothing (SMOOTHING_ALPHA mirrors in-process alpha)"):
        import os

        env_backup = os.environ.get("SMOOTHING_ALPHA")
        os.environ["SMOOTHING_ALPHA"] = "1"
        try:
            backend = BridgeBackend(SERVER_CMD)
            try:
                th = Thresholds(tau_a=0.2, tau_c=0.5, max_antecedents=2)
                remote = extract_rules_single_target(t1, backend, th)
            finally:
                backend.close()
            local = extract_rules_single_target(t1, EmpiricalBackend(alpha=1.0), th)
            assert local.structure() == remote.structure()
            assert [r.validity for r in local] == [r.validity for r in remote]
        finally:
            if env_backup is None:
                del os.environ["SMOOTHING_ALPHA"]
            else:
                os.environ["SMOOTHING_ALPHA"] = env_backup
