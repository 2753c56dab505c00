"""Batch front end: config files in, deterministic reports out.

The command line (`lyapvar <subcommand> --config run.ini`) wraps everything
in the library.  This script writes a config, runs two subcommands
in-process, and shows that the report hash is stable across worker counts.
"""

import json
import tempfile
from pathlib import Path

from lyapvar.cli import run

CONFIG = """
[grid]
d = 1
n = 64

[potential]
kind = constant
v = 0.5

[run]
y = 1.0
seed = 9

[optimizer]
n_starts = 2
max_iter = 120

[mc]
npaths = 1000
r_list = 2.0 3.0
"""

workdir = Path(tempfile.mkdtemp(prefix="lyapvar_demo_"))
config = workdir / "run.ini"
config.write_text(CONFIG)
print(f"workspace: {workdir}")

print("\n== lyapunov: all routes in one report ==")
code, report = run("lyapunov", config, out=workdir / "out")
print(f"exit code {code}")
row = report["results"]["gamma"][0]
print(f"gamma routes: root={row['root']:.4f} infsup={row['infsup']:.4f} supinf={row['supinf']:.4f}")
print(f"transform:    {report['results']['rtransform'][0]['value']:.4f}")
print(f"mc slope:     {report['results']['mc_survival']['slope']:.4f}")
for check in report["checks"]:
    print(f"  check {check['name']}: {'ok' if check['passed'] else 'FAILED'}")

print("\n== determinism across workers ==")
_, r1 = run("mc", config, workers=1, out=workdir / "w1")
_, r8 = run("mc", config, workers=8, out=workdir / "w8")
print(f"hash(workers=1) == hash(workers=8): {r1['determinism_hash'] == r8['determinism_hash']}")

print("\n== files on disk ==")
loaded = json.loads((workdir / "out" / "report.json").read_text())
print(f"report.json round-trips, version {loaded['version']}")
print(f"survival table: {(workdir / 'out' / 'survival.csv').read_text().splitlines()[0]}")
