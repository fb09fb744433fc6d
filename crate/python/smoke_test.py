"""Smoke test for the blocksplit_py extension module.

Build and run from the repository root:

    cargo build --release -p blocksplit-python --features extension-module
    cp target/release/libblocksplit_py.so python/blocksplit_py.so
    python3 python/smoke_test.py
"""

import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import blocksplit_py as bs


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print(f"ok   {msg}")


def main():
    # prox of the hinge max{0, 1 - 2 xi} at 0 with gamma = 0.1 moves right by gamma * beta
    p = bs.prox(json.dumps({"kind": "hinge", "beta": 2.0}), [0.0], 0.1)
    check(abs(p[0] - 0.2) < 1e-12, "hinge prox")
    try:
        bs.prox(json.dumps({"kind": "hinge", "beta": 0.0}), [0.0], 1.0)
        check(False, "invalid function rejected")
    except ValueError:
        check(True, "invalid function rejected")

    prob = bs.Problem.experiment("exp2", seed=1)
    check((prob.m, prob.p) == (1, 31), "image problem shape")
    again = bs.Problem.from_json(prob.to_json())
    check(again.primal_dims == prob.primal_dims, "JSON round trip")

    x, v = bs.reference(prob)
    check(len(x) == 1 and len(x[0]) == 576 and len(v) == 31, "reference point")

    trace = bs.run(prob, algorithm="ps", alpha=1.0, epochs=20, reference=x)
    check(list(trace[0].keys()) == bs.CSV_HEADER.split(","), "trace columns match CSV header")
    check(trace[-1]["epochs"] >= 20 and trace[-1]["error_db"] < -10, "ps reduces the error")
    dr = bs.run(prob, algorithm="dr", alpha=0.4, seed=3, epochs=20, reference=x)
    check(all(a["iteration"] < b["iteration"] for a, b in zip(dr, dr[1:])), "iterations increase")
    check(dr == bs.run(prob, algorithm="dr", alpha=0.4, seed=3, epochs=20, reference=x), "runs are reproducible")

    cells = bs.compare(prob, alphas=[0.4, 1.0], seeds=2, epochs=5, reference=x)
    check(len(cells) == 4 and all(math.isfinite(c["error_db"][-1]) for c in cells), "comparison grid")

    report = bs.validate()
    for index, name, passed, detail in report:
        print(f"     [{index:2}] {'PASS' if passed else 'FAIL'} {name}: {detail}")
    check(all(r[2] for r in report), "invariant checks pass")
    print("smoke test passed")


if __name__ == "__main__":
    main()
