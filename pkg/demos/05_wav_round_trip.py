"""Export a simulated session as WAV files and score it like an external system.

This is the path for plugging in a real extractor: write its outputs into
est/ with the same file names and run the scorer (or `evoenroll score`).
"""
import csv
import tempfile
from pathlib import Path

from evoenroll import cli

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "session"
    cli.main(["export-session", "--segments", "6", "--seed", "2", "--out", str(out)])
    print("exported:", sorted(p.name for p in out.iterdir()))

    rows, failures = cli.cmd_score(out / "est", out / "ref", out / "mix", out / "score.csv")
    with open(out / "records.csv") as f:
        in_process = {r["file"]: float(r["si_sdri"]) for r in csv.DictReader(f)}
    for name, ev in rows:
        print(f"{name}: from WAV {ev.si_sdri:7.3f} dB, in process {in_process[name]:7.3f} dB")
    print("failures:", failures or "none")
