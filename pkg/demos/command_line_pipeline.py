#!/usr/bin/env python3
"""The same pipeline as build_a_timeline.py, but through the CLI.

Every subcommand writes plain-text artifacts that embed the config and
seed that produced them, so any file can be traced back to its run. The
whole chain is deterministic: same seed, same bytes.

Run:
    python demos/command_line_pipeline.py
"""

import tempfile
from pathlib import Path

from pietimeline.cli import main

work = Path(tempfile.mkdtemp(prefix="pietimeline_demo_"))
print(f"working under {work}")
print()


def run(*argv):
    print("$ pietimeline " + " ".join(argv))
    code = main(list(argv))
    assert code == 0, f"exit {code}"


def show(path, n=6, label=None):
    lines = Path(path).read_text().splitlines()
    print(f"--- {label or Path(path).name} ({len(lines)} lines) ---")
    for line in lines[:n]:
        print(f"  {line[:110]}")
    if len(lines) > n:
        print(f"  ... {len(lines) - n} more")
    print()


data = work / "data"
run("synth", "--preset", "separable", "--seed", "7", "--out", str(data),
    "--users", "6", "--epochs", "6", "--docs-per-cell", "6",
    "--vocab", "200", "--truncation", "10")
show(data / "corpus.jsonl")
show(data / "gold.tsv")

run("fit", "--corpus", str(data / "corpus.jsonl"), "--model", "dpm",
    "--seed", "7", "--eta-x", "0.25", "--eta-y", "0.25",
    "--burn-in", "120", "--samples", "60", "--out", str(work / "summary.json"))

run("inspect", "--summary", str(work / "summary.json"),
    "--corpus", str(data / "corpus.jsonl"), "--top-n", "5",
    "--out", str(work / "inspect.txt"))
show(work / "inspect.txt", n=10)

run("timeline", "--summary", str(work / "summary.json"),
    "--corpus", str(data / "corpus.jsonl"), "--user", "u000",
    "--out", str(work / "timeline.txt"))
show(work / "timeline.txt", n=8)

run("eval", "--summary", str(work / "summary.json"),
    "--corpus", str(data / "corpus.jsonl"), "--gold", str(data / "gold.tsv"),
    "--out", str(work / "report"))
show(work / "report.txt", n=12)

print("artifacts left behind for inspection:")
for p in sorted(work.rglob("*")):
    if p.is_file():
        print(f"  {p}")
