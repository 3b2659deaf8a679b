"""Deterministic synthetic CHAT corpora standing in for restricted clinical data.

Every participant "describes a picture" by drawing words from a shared pool
with Zipf-like frequencies; a fixed share of word slots (20% by default) is
filled from a class-specific pool instead, which is the only signal
separating the classes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SHARED_WORDS = (
    "the a boy girl mother cookie cookies jar stool sink water window plate dish dishes "
    "kitchen cupboard shelf floor curtain lid is are was taking falling washing reaching "
    "standing running and on in of to up out over with she he they her his it there "
    "outside tree grass path garden cups counter apron towel little big"
).split()
_ZIPF = 1.0 / np.arange(1, len(SHARED_WORDS) + 1)
SHARED_WEIGHTS = _ZIPF / _ZIPF.sum()
MCI_WORDS = ("thing",)
CONTROL_WORDS = ("spigot",)
UTTERANCES = (16, 26)  # per visit, upper bound exclusive
INVESTIGATOR_LINES = (
    "tell me everything you see going on in this picture .",
    "anything else ?",
    "mhm .",
    "what else is happening ?",
)


def _utterance(rng: np.random.Generator, class_words, rate: float) -> list[str]:
    n = int(rng.integers(5, 13))
    words = []
    for _ in range(n):
        if rng.random() < rate:
            words.append(class_words[int(rng.integers(len(class_words)))])
        else:
            words.append(SHARED_WORDS[int(rng.choice(len(SHARED_WORDS), p=SHARED_WEIGHTS))])
    return words


def chat_transcript(pid: str, words_by_utt: list[list[str]], rng: np.random.Generator) -> str:
    """Render utterances as CHAT with investigator turns, pauses and timing bullets."""
    lines = [
        "@UTF8",
        "@Begin",
        "@Languages:\teng",
        f"@PID:\t{pid}",
        "@Participants:\tPAR Participant, INV Investigator",
        "@Media:\tsynthetic, audio",
    ]
    clock = 0
    for u, words in enumerate(words_by_utt):
        if u % 4 == 0:
            inv = INVESTIGATOR_LINES[(u // 4) % len(INVESTIGATOR_LINES)]
            dur = 1500
            lines.append(f"*INV:\t{inv} \x15{clock}_{clock + dur}\x15")
            clock += dur + 200
        text = list(words)
        if rng.random() < 0.3:
            text.insert(int(rng.integers(len(text) + 1)), "(.)")
        if rng.random() < 0.15:
            text.insert(0, "&uh")
        if rng.random() < 0.1:
            text = [text[0], "[/]"] + text
        dur = int(sum(rng.integers(250, 450) for _ in words))
        lines.append(f"*PAR:\t{' '.join(text)} . \x15{clock}_{clock + dur}\x15")
        clock += dur + int(rng.integers(300, 2000))
    lines.append("@End")
    return "\n".join(lines) + "\n"


def write_synthetic_corpus(
    out_dir: str | Path,
    *,
    n_mci: int = 19,
    n_control: int = 19,
    n_validation: int = 8,
    rate: float = 0.2,
    seed: int = 2024,
) -> tuple[Path, Path]:
    """Write CHAT files plus ``manifest.csv`` (train/eval) and ``validation_manifest.csv``.

    Train/eval participants get 1-3 visits (select the last one); validation
    participants are distinct people with two visits each (select the
    second-to-last).  Returns the two manifest paths.
    """
    out = Path(out_dir)
    (out / "transcripts").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = {"TRAIN_EVAL": [], "VALIDATION": []}
    people = (
        [("TRAIN_EVAL", "MCI", f"mci{i:02d}") for i in range(n_mci)]
        + [("TRAIN_EVAL", "CONTROL", f"ctl{i:02d}") for i in range(n_control)]
        + [("VALIDATION", "MCI", f"vmci{i:02d}") for i in range(n_validation)]
        + [("VALIDATION", "CONTROL", f"vctl{i:02d}") for i in range(n_validation)]
    )
    for role, label, pid in people:
        class_words = MCI_WORDS if label == "MCI" else CONTROL_WORDS
        n_visits = 2 if role == "VALIDATION" else int(rng.integers(1, 4))
        for visit in range(1, n_visits + 1):
            utts = [_utterance(rng, class_words, rate) for _ in range(int(rng.integers(*UTTERANCES)))]
            rel = f"transcripts/{pid}-{visit}.cha"
            (out / rel).write_text(chat_transcript(pid, utts, rng), encoding="utf-8")
            rows[role].append((rel, pid, visit, label, role))
    paths = []
    for role, name in (("TRAIN_EVAL", "manifest.csv"), ("VALIDATION", "validation_manifest.csv")):
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "participant_id", "visit_index", "label", "split_role"])
            w.writerows(rows[role])
        paths.append(path)
    return paths[0], paths[1]
