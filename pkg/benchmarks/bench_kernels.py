"""Compare the numba kernels with the pure-Python fallback.

Each variant runs in a fresh interpreter (the JIT switch is read at import
time).  Besides wall time per event, the script checks that both paths
return identical outputs.

    python3 benchmarks/bench_kernels.py [--rows 200] [--model seiarhd]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time, hashlib
import numpy as np
from ctmcgsa import build_sir, build_seiarhd, SEIARHD_NOMINAL
from ctmcgsa._jit import JIT_ENABLED
from ctmcgsa.rng import UniformStream, draw_seeds
from ctmcgsa.simulate import RepresentationKind, simulate_batch

model_name, rows, kind = sys.argv[1], int(sys.argv[2]), sys.argv[3]
if model_name == "sir":
    model, theta, stop = build_sir(), [2.0, 1.0], ["I"]
else:
    model = build_seiarhd()
    theta, stop = [SEIARHD_NOMINAL[p] for p in model.parameter_names], ["E", "A", "I"]
kind = RepresentationKind.parse(kind)
thetas = np.tile(np.array(theta), (rows, 1))
seeds = draw_seeds(UniformStream(12345), (rows, kind.n_streams(model)))
# warm-up (compilation or cache load) on two rows
simulate_batch(model, kind, thetas[:2], seeds[:2], stop_when_empty=stop)
t0 = time.perf_counter()
res = simulate_batch(model, kind, thetas, seeds, stop_when_empty=stop)
elapsed = time.perf_counter() - t0
digest = hashlib.sha256(res.stop_times.tobytes() + res.n_events.tobytes()).hexdigest()
print(json.dumps({"jit": JIT_ENABLED, "seconds": elapsed, "events": int(res.n_events.sum()), "digest": digest}))
"""


def run(disable_jit: bool, model: str, rows: int, kind: str) -> dict:
    env = dict(os.environ)
    if disable_jit:
        env["CTMCGSA_DISABLE_JIT"] = "1"
    else:
        env.pop("CTMCGSA_DISABLE_JIT", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, model, str(rows), kind], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", choices=("sir", "seiarhd"), default="sir")
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--kinds", default="direct,direct2,first-reaction,mnrm")
    args = ap.parse_args(argv)

    print(f"{'kind':16s} {'numba ns/ev':>12s} {'python ns/ev':>13s} {'speedup':>8s}  identical")
    ok = True
    for kind in args.kinds.split(","):
        fast = run(False, args.model, args.rows, kind)
        slow = run(True, args.model, args.rows, kind)
        same = fast["digest"] == slow["digest"]
        ok &= same
        nf = 1e9 * fast["seconds"] / max(fast["events"], 1)
        ns = 1e9 * slow["seconds"] / max(slow["events"], 1)
        print(f"{kind:16s} {nf:12.1f} {ns:13.1f} {ns / nf:8.1f}  {same}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
