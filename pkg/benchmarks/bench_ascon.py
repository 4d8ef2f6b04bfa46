"""Compare the compiled and pure-Python Ascon kernels.

    python3 benchmarks/bench_ascon.py [--repeat N]

Reports microseconds per call for sealing a 64-byte message and for hashing
1 KiB, plus a one-run simulation of the handoff scenario under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit
from pathlib import Path

from edgehandoff.crypto import _ascon_py

try:
    from edgehandoff.crypto import _ascon_ext
except ImportError:
    _ascon_ext = None

ROOT = Path(__file__).resolve().parent.parent
KEY = bytes(range(16))
NONCE = bytes(range(16, 32))
AD = b"header" * 4
MSG = bytes(64)
BLOB = bytes(range(256)) * 4

SIM = (
    "import time; from edgehandoff.scenario import load_scenario; from edgehandoff.simnet import run;"
    "s = load_scenario({path!r}); t = time.perf_counter(); run(s); print(time.perf_counter() - t)"
)


def per_call_us(fn, repeat: int) -> float:
    number = max(1, repeat)
    best = min(timeit.repeat(fn, number=number, repeat=3))
    return best / number * 1e6


def sim_seconds(pure: bool) -> float:
    env = dict(os.environ, EDGEHANDOFF_PURE_PYTHON="1" if pure else "0")
    code = SIM.format(path=str(ROOT / "scenarios" / "handoff_chain.yaml"))
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    backends = [("python", _ascon_py)]
    if _ascon_ext is not None:
        backends.insert(0, ("cython", _ascon_ext))
    else:
        print("compiled extension not built; only the fallback is measured")

    rows = []
    for name, mod in backends:
        seal = per_call_us(lambda: mod.aead_encrypt(KEY, NONCE, AD, MSG, 0), args.repeat)
        digest = per_call_us(lambda: mod.hash256(BLOB), max(1, args.repeat // 4))
        rows.append((name, seal, digest))

    print(f"{'backend':<8} {'seal 64B (us)':>14} {'hash 1KiB (us)':>15}")
    for name, seal, digest in rows:
        print(f"{name:<8} {seal:>14.1f} {digest:>15.1f}")
    if len(rows) == 2:
        print(f"speedup  {rows[1][1] / rows[0][1]:>13.1f}x {rows[1][2] / rows[0][2]:>14.1f}x")
        fast, slow = sim_seconds(False), sim_seconds(True)
        print(f"handoff_chain scenario: cython {fast:.3f} s, python {slow:.3f} s")


if __name__ == "__main__":
    main()
