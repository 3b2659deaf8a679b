"""Shared fixtures: hand-built samples and small on-disk corpora."""

from __future__ import annotations

import csv
from pathlib import Path

import pytest

from skipgram_mci.synthetic import write_synthetic_corpus
from skipgram_mci.transcripts import Label, TimingStats, TranscriptSample


def make_sample(utterances, label=Label.MCI, pid="p", visit=1, timing=None):
    """Sample from a list of utterances, each a whitespace-separated string or a token list."""
    tokens = [u.split() if isinstance(u, str) else list(u) for u in utterances]
    if timing is None:
        timing = TimingStats(None, None, 0, sum(len(t) for t in tokens))
    return TranscriptSample(pid, label, tokens, timing=timing, visit_index=visit)


def write_manifest(path: Path, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "participant_id", "visit_index", "label", "split_role"])
        w.writerows(rows)
    return path


def write_chat(path: Path, pid: str, lines) -> None:
    body = "".join(f"*PAR:\t{line}\n" for line in lines)
    path.write_text(f"@UTF8\n@Begin\n@PID:\t{pid}\n@Participants:\tPAR Participant\n{body}@End\n",
                    encoding="utf-8")


@pytest.fixture
def separable_dir(tmp_path):
    """Six CHAT files (3 MCI, 3 CONTROL) whose classes use disjoint marker words."""
    rows = []
    for i in range(3):
        for label, marker in (("MCI", "thing"), ("CONTROL", "spigot")):
            pid = f"{label.lower()}{i}"
            write_chat(tmp_path / f"{pid}.cha", pid, [
                f"the boy {marker} is on the stool .",
                f"the {marker} mother is washing {marker} dishes .",
                f"water {marker} is falling on the floor .",
            ])
            rows.append((f"{pid}.cha", pid, 1, label, "TRAIN_EVAL"))
    write_manifest(tmp_path / "manifest.csv", rows)
    return tmp_path


@pytest.fixture(scope="session")
def synthetic_dir(tmp_path_factory):
    """The default seeded synthetic corpus (19 + 19 train/eval, 8 + 8 validation)."""
    out = tmp_path_factory.mktemp("synthetic")
    write_synthetic_corpus(out)
    return out


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts, one line per criterion, at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
