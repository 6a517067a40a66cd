"""
Seeded batch experiments
========================

The harness derives each trial's instance seed from (base seed, n, trial),
so every record is reproducible on its own.  Records stream to CSV and the
summary can be recomputed from the file.
"""

import tempfile
from pathlib import Path

from vqpm.harness import ExperimentSpec, format_summary, read_records, run_batch, summarize

spec = ExperimentSpec(n_values=(6, 8, 10), trials_per_n=20, policy="fixed:0.01")

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "trials.csv"
    records = run_batch(spec, out)
    print(out.read_text().splitlines()[0])
    print(format_summary(summarize(records)))
    # The file alone reproduces the in-memory summary.
    assert summarize(read_records(out)) == summarize(records)
