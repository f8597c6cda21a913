"""Drive the command line end to end: generate four logs, benchmark them.

Everything here shells through loopminer.cli.main with argv lists, so the
same commands work verbatim from a terminal:

    loopminer genlog L1 --traces 200 -o l1.xes
    loopminer bench logs/ --trace-filter 0 -o bench.md
"""

import tempfile
from pathlib import Path

from loopminer.cli import main

workdir = Path(tempfile.mkdtemp(prefix="loopminer_demo_"))

for pattern in ("L1", "L2", "L3", "L4"):
    out = workdir / f"{pattern.lower()}.xes"
    code = main(["genlog", pattern, "--traces", "200", "--seed", "7", "-o", str(out)])
    assert code == 0

# Benchmark the whole directory. trace-filter 0 keeps every variant, since
# generated logs have no noise to strip.
report_path = workdir / "bench.md"
code = main(["bench", str(workdir), "--trace-filter", "0", "-o", str(report_path)])
assert code == 0

print()
print(report_path.read_text())
print(f"(files left in {workdir} for inspection)")
