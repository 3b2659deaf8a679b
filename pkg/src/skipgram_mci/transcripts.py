"""Reading CHAT / plain-text interview transcripts into labeled token sequences.

The CHAT subset understood here::

    @Header:<tab>value        file headers (``@Begin`` style headers have no value)
    *PAR:<tab>utterance text  main tier, one per utterance
    %mor:<tab>...             dependent tier, attached to the preceding utterance
    <tab>continued text       continuation of the previous tier line

Timing bullets (``•1500_2400•``, also the raw ``\\x15`` bullet character) and
pause codes (``(.)``, ``(..)``, ``(...)``, ``(2.5)``) are read off the main tier.
"""

from __future__ import annotations

import csv
import enum
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import CorpusError, ManifestError, ParseError

log = logging.getLogger(__name__)

PARTICIPANT_TIER = "PAR"


class Label(str, enum.Enum):
    MCI = "MCI"
    CONTROL = "CONTROL"

    @classmethod
    def parse(cls, value: str) -> "Label":
        key = (value or "").strip().upper()
        if key in ("MCI", "1", "POS", "PATIENT"):
            return cls.MCI
        if key in ("CONTROL", "0", "NEG", "HC"):
            return cls.CONTROL
        raise ValueError(f"unknown label {value!r}")

    @property
    def y(self) -> int:
        """1 for MCI (the positive class), 0 for CONTROL."""
        return 1 if self is Label.MCI else 0


class SplitRole(str, enum.Enum):
    TRAIN_EVAL = "TRAIN_EVAL"
    VALIDATION = "VALIDATION"


class VisitPolicy(str, enum.Enum):
    LAST = "LAST"
    SECOND_TO_LAST = "SECOND_TO_LAST"


@dataclass
class RawUtterance:
    speaker_code: str
    raw_text: str
    pause_marks: int = 0
    segment_times_ms: list[tuple[int, int]] = field(default_factory=list)
    dependent_tiers: dict[str, str] = field(default_factory=dict)
    line: int | None = None

    def __post_init__(self):
        if self.pause_marks < 0:
            raise ValueError("pause_marks must be >= 0")
        for start, end in self.segment_times_ms:
            if end < start:
                raise ValueError(f"segment ends before it starts: {(start, end)}")


@dataclass
class RawTranscript:
    participant_id: str | None
    visit_index: int | None = None
    header_fields: dict[str, str] = field(default_factory=dict)
    utterances: list[RawUtterance] = field(default_factory=list)


@dataclass
class TimingStats:
    """Speech timing derived from transcript annotations.

    ``total_time_s`` and ``speech_time_s`` are None when the transcript
    carries no timing bullets; pause and word counts are always known.
    """

    total_time_s: float | None
    speech_time_s: float | None
    pause_count: int
    word_count: int

    def validate(self) -> None:
        if self.pause_count < 0 or self.word_count < 0:
            raise ValueError("counts must be non-negative")
        if (self.total_time_s is None) != (self.speech_time_s is None):
            raise ValueError("total_time_s and speech_time_s must both be set or both be None")
        if self.total_time_s is not None:
            if not 0 <= self.speech_time_s <= self.total_time_s:
                raise ValueError(
                    f"need 0 <= speech_time_s <= total_time_s, got "
                    f"{self.speech_time_s} / {self.total_time_s}"
                )


@dataclass
class TranscriptSample:
    participant_id: str
    label: Label | None
    tokens: list[list[str]]
    pos_tags: list[list[str] | None] | None = None
    timing: TimingStats | None = None
    visit_index: int = 1
    source: str | None = None

    def __post_init__(self):
        if self.pos_tags is not None:
            if len(self.pos_tags) != len(self.tokens):
                raise ValueError("pos_tags must have one entry per utterance")
            for toks, tags in zip(self.tokens, self.pos_tags):
                if tags is not None and len(tags) != len(toks):
                    raise ValueError("pos_tags must be parallel to tokens")

    @property
    def n_words(self) -> int:
        return sum(len(u) for u in self.tokens)


@dataclass
class ManifestEntry:
    path: Path
    participant_id: str
    visit_index: int
    label: Label
    split_role: SplitRole = SplitRole.TRAIN_EVAL


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    split_role: SplitRole = SplitRole.TRAIN_EVAL

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            key = (e.participant_id, e.visit_index)
            if key in seen:
                raise ManifestError(f"duplicate (participant, visit) pair: {key}")
            seen.add(key)


@dataclass
class Corpus:
    samples: list[TranscriptSample]
    split_role: SplitRole = SplitRole.TRAIN_EVAL
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def class_counts(self) -> tuple[int, int]:
        """(MCI, CONTROL) sample counts."""
        n_mci = sum(1 for s in self.samples if s.label is Label.MCI)
        return n_mci, len(self.samples) - n_mci

    @property
    def labels(self) -> list[Label]:
        return [s.label for s in self.samples]

    def __len__(self):
        return len(self.samples)


# -- CHAT parsing -----------------------------------------------------------

_BULLET = "[•\x15]"
_BULLET_RE = re.compile(rf"{_BULLET}\s*(\d+)_(\d+)\s*{_BULLET}")
_PAUSE_RE = re.compile(r"\((?:\.{1,3}|\d+(?::\d+)?\.\d*|\d*\.\d+)\)")
_HEADER_RE = re.compile(r"^@([^:\t]+?)(?::\s*(.*))?$")
_MAIN_RE = re.compile(r"^\*([A-Za-z0-9_]+):(?:[ \t](.*))?$")
_DEP_RE = re.compile(r"^%([A-Za-z0-9_]+):(?:[ \t](.*))?$")
_PARTICIPANT_HEADERS = ("PID", "Participants")


def parse_chat(text: str, participant_id: str | None = None) -> RawTranscript:
    """Parse CHAT text into a :class:`RawTranscript`.

    Header-less fragments are accepted; once a header block is present it must
    identify the participants (``@PID`` or ``@Participants``).
    """
    headers: dict[str, str] = {}
    utterances: list[RawUtterance] = []
    # (kind, key, line_no, parts) for the tier currently being accumulated
    current: list | None = None

    def flush():
        if current is None:
            return
        kind, key, line_no, parts = current
        body = " ".join(p.strip() for p in parts if p.strip())
        if kind == "main":
            utterances.append(_make_utterance(key, body, line_no))
        elif kind == "dep":
            if not utterances:
                raise ParseError(f"dependent tier %{key} before any utterance", line_no)
            utterances[-1].dependent_tiers[key] = body
        else:
            headers[key] = f"{headers[key]}\n{body}" if key in headers else body

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line[0] in " \t":
            if current is None:
                raise ParseError("continuation line with nothing to continue", line_no)
            current[3].append(line)
            continue
        flush()
        head = line[0]
        if head == "@":
            m = _HEADER_RE.match(line.rstrip())
            if not m:
                raise ParseError(f"malformed header {line!r}", line_no)
            current = ["header", m.group(1).strip(), line_no, [m.group(2) or ""]]
        elif head == "*":
            m = _MAIN_RE.match(line)
            if not m:
                raise ParseError(f"malformed speaker tier prefix in {line!r}", line_no)
            current = ["main", m.group(1), line_no, [m.group(2) or ""]]
        elif head == "%":
            m = _DEP_RE.match(line)
            if not m:
                raise ParseError(f"malformed dependent tier prefix in {line!r}", line_no)
            current = ["dep", m.group(1).lower(), line_no, [m.group(2) or ""]]
        else:
            raise ParseError(f"line is not a header, tier or continuation: {line!r}", line_no)
    flush()

    if headers and not any(h in headers for h in _PARTICIPANT_HEADERS):
        raise ParseError("missing participant header (@PID or @Participants)")
    pid = headers.get("PID", "").strip() or participant_id
    return RawTranscript(participant_id=pid, header_fields=headers, utterances=utterances)


def _make_utterance(speaker: str, body: str, line_no: int) -> RawUtterance:
    segments = []
    for m in _BULLET_RE.finditer(body):
        start, end = int(m.group(1)), int(m.group(2))
        if end < start:
            raise ParseError(f"timing bullet ends before it starts: {m.group(0)}", line_no)
        segments.append((start, end))
    return RawUtterance(
        speaker_code=speaker,
        raw_text=body,
        pause_marks=len(_PAUSE_RE.findall(body)),
        segment_times_ms=segments,
        line=line_no,
    )


_PLAIN_SPEAKER_RE = re.compile(r"^\*?([A-Z][A-Z0-9]{1,7}):\s+(.*)$")


def parse_plain(text: str, participant_id: str | None = None) -> RawTranscript:
    """One utterance per non-blank line; an optional ``SPK:`` prefix names the speaker."""
    utterances = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _PLAIN_SPEAKER_RE.match(line.strip())
        speaker, body = (m.group(1), m.group(2)) if m else (PARTICIPANT_TIER, line.strip())
        utterances.append(_make_utterance(speaker, body, line_no))
    return RawTranscript(participant_id=participant_id, utterances=utterances)


# -- cleaning ---------------------------------------------------------------

_ITEM_RE = re.compile(r"(<[^<>]*>)|(\[[^\[\]]*\])|([^\s<>\[\]]+)")
_RETRACE_RE = re.compile(r"^\[/{1,3}[-?]?\]$")
_UNINTELLIGIBLE = frozenset({"xxx", "yyy", "www"})
_SPLIT_RE = re.compile(r"[+_\-~]")
_NOT_TOKEN_CHAR = re.compile(r"[^a-z0-9']")
_OMITTED_RE = re.compile(r"^0[a-z]")


def _clean_word(raw: str) -> list[str]:
    if raw[0] in "&+" or _OMITTED_RE.match(raw.lower()):
        return []
    raw = raw.split("@", 1)[0].replace("(", "").replace(")", "")
    out = []
    for part in _SPLIT_RE.split(raw):
        w = _NOT_TOKEN_CHAR.sub("", part.lower())
        w = re.sub("'+", "'", w).strip("'")
        if w and w not in _UNINTELLIGIBLE and not _OMITTED_RE.match(w):
            out.append(w)
    return out


def _clean_text(text: str) -> list[str]:
    text = _PAUSE_RE.sub(" ", _BULLET_RE.sub(" ", text))
    items: list[list[str]] = []
    for group, code, word in _ITEM_RE.findall(text):
        if code:
            if _RETRACE_RE.match(code.replace(" ", "")) and items:
                items.pop()
        elif group:
            items.append(_clean_text(group[1:-1]))
        else:
            items.append(_clean_word(word))
    return [w for item in items for w in item]


def clean_and_tokenize(utterance: RawUtterance | str) -> list[str]:
    """Strip CHAT annotation from one utterance and return lowercase word tokens.

    Fillers (``&uh``), events (``&=laughs``), bracketed codes, unintelligible
    markers and omitted words (``0is``) are dropped.  A retracing marker
    (``[/]``, ``[//]``, ...) removes the word or ``<group>`` it follows, keeping
    the repaired material.
    """
    text = utterance.raw_text if isinstance(utterance, RawUtterance) else utterance
    return _clean_text(text)


# -- %mor tier --------------------------------------------------------------

COARSE_TAGS = (
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "CONJ", "NUM", "PART", "INTJ", "X",
)

_MOR_MAP = {
    "n": "NOUN", "v": "VERB", "cop": "VERB", "aux": "VERB", "mod": "VERB", "part": "VERB",
    "adj": "ADJ", "adv": "ADV", "pro": "PRON", "det": "DET", "art": "DET", "qn": "DET",
    "prep": "ADP", "conj": "CONJ", "coord": "CONJ", "num": "NUM", "inf": "PART",
    "neg": "PART", "co": "INTJ", "on": "INTJ",
}


def mor_to_coarse(category: str) -> str:
    """Map a %mor part-of-speech (``det:art``, ``n:prop``...) to the coarse tagset."""
    main, _, sub = category.lower().partition(":")
    if main == "det" and sub == "num":
        return "NUM"
    return _MOR_MAP.get(main, "X")


def parse_mor(mor: str) -> list[str]:
    """Coarse tags of the word items in a %mor tier; punctuation items are skipped."""
    tags = []
    for item in mor.split():
        head = item.split("~", 1)[0]
        if "|" not in head:
            continue
        tags.append(mor_to_coarse(head.split("|", 1)[0].lstrip("&+")))
    return tags


# -- samples & corpora ------------------------------------------------------

def _merged_duration_ms(segments: Iterable[tuple[int, int]]) -> int:
    total = 0
    cur_start = cur_end = None
    for start, end in sorted(segments):
        if cur_end is None or start > cur_end:
            if cur_end is not None:
                total += cur_end - cur_start
            cur_start, cur_end = start, end
        else:
            cur_end = max(cur_end, end)
    if cur_end is not None:
        total += cur_end - cur_start
    return total


def to_sample(
    raw: RawTranscript,
    label: Label | None,
    *,
    participant_id: str | None = None,
    visit_index: int = 1,
    speakers: Sequence[str] | None = (PARTICIPANT_TIER,),
    source: str | None = None,
) -> TranscriptSample:
    """Clean a parsed transcript into a sample.

    ``speakers=None`` keeps every tier, investigator speech included.
    """
    kept = [u for u in raw.utterances if speakers is None or u.speaker_code in speakers]
    tokens, tags = [], []
    have_mor = False
    for u in kept:
        toks = clean_and_tokenize(u)
        if not toks:
            continue
        tokens.append(toks)
        mor = u.dependent_tiers.get("mor")
        utt_tags = None
        if mor is not None:
            have_mor = True
            parsed = parse_mor(mor)
            utt_tags = parsed if len(parsed) == len(toks) else None
        tags.append(utt_tags)

    segments = [seg for u in kept for seg in u.segment_times_ms]
    if segments:
        total_s = (max(e for _, e in segments) - min(s for s, _ in segments)) / 1000.0
        speech_s = _merged_duration_ms(segments) / 1000.0
    else:
        total_s = speech_s = None
    timing = TimingStats(
        total_time_s=total_s,
        speech_time_s=speech_s,
        pause_count=sum(u.pause_marks for u in kept),
        word_count=sum(len(t) for t in tokens),
    )
    pid = participant_id or raw.participant_id
    if not pid:
        raise ParseError("transcript has no participant id")
    return TranscriptSample(
        participant_id=pid,
        label=label,
        tokens=tokens,
        pos_tags=tags if have_mor else None,
        timing=timing,
        visit_index=visit_index,
        source=source,
    )


class VisitSelection(NamedTuple):
    samples: list[TranscriptSample]
    skipped: list[str]


def select_visit(samples: Iterable[TranscriptSample], policy: VisitPolicy | str) -> VisitSelection:
    """Pick one visit per participant: the last, or the one before it.

    Participants with a single visit have no second-to-last visit; they are
    left out and listed in ``skipped``.
    """
    policy = VisitPolicy(policy)
    by_pid: dict[str, list[TranscriptSample]] = defaultdict(list)
    for s in samples:
        by_pid[s.participant_id].append(s)
    chosen, skipped = [], []
    for pid, visits in by_pid.items():
        visits = sorted(visits, key=lambda s: s.visit_index)
        if policy is VisitPolicy.LAST:
            chosen.append(visits[-1])
        elif len(visits) >= 2:
            chosen.append(visits[-2])
        else:
            skipped.append(pid)
    return VisitSelection(chosen, skipped)


_MANIFEST_COLUMNS = ("path", "participant_id", "visit_index", "label", "split_role")


def read_manifest(path: str | Path, split_role: SplitRole | str | None = None) -> CorpusManifest:
    """Read a manifest CSV (path,participant_id,visit_index,label,split_role).

    Relative paths resolve against the manifest's own directory.  When
    ``split_role`` is given only matching rows are kept; otherwise all rows
    must share one role.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    reader = csv.DictReader(text.splitlines())
    missing = [c for c in _MANIFEST_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ManifestError(f"{path}: missing columns {missing}")
    want = SplitRole(split_role.upper() if isinstance(split_role, str) else split_role) if split_role else None
    entries = []
    for row_no, row in enumerate(reader, start=2):
        try:
            if not (row["label"] or "").strip():
                raise ValueError("label missing")
            entry = ManifestEntry(
                path=(path.parent / row["path"].strip()),
                participant_id=row["participant_id"].strip(),
                visit_index=int(row["visit_index"]),
                label=Label.parse(row["label"]),
                split_role=SplitRole((row["split_role"] or "TRAIN_EVAL").strip().upper()),
            )
        except (ValueError, AttributeError) as exc:
            raise ManifestError(f"{path}:{row_no}: {exc}") from exc
        if entry.visit_index < 1:
            raise ManifestError(f"{path}:{row_no}: visit_index must be >= 1")
        if want is None or entry.split_role is want:
            entries.append(entry)
    roles = {e.split_role for e in entries}
    if want is None and len(roles) > 1:
        raise ManifestError(f"{path}: mixed split roles; pass split_role to choose one")
    role = want or (roles.pop() if roles else SplitRole.TRAIN_EVAL)
    return CorpusManifest(entries=entries, split_role=role)


def load_transcript(path: Path, participant_id: str | None = None) -> RawTranscript:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".cha":
        return parse_chat(text, participant_id)
    return parse_plain(text, participant_id)


def load_corpus(
    manifest: CorpusManifest,
    *,
    speakers: Sequence[str] | None = (PARTICIPANT_TIER,),
) -> Corpus:
    """Parse every manifest entry into a labeled sample.

    Entries whose cleaned token stream is empty are skipped and reported.
    """
    if not manifest.entries:
        log.warning("empty manifest: corpus has no samples")
    samples, skipped = [], []
    for entry in manifest.entries:
        try:
            raw = load_transcript(entry.path, entry.participant_id)
        except OSError as exc:
            raise CorpusError(f"cannot read transcript {entry.path}: {exc}") from exc
        except ParseError as exc:
            raise CorpusError(f"{entry.path}: {exc}") from exc
        sample = to_sample(
            raw,
            entry.label,
            participant_id=entry.participant_id,
            visit_index=entry.visit_index,
            speakers=speakers,
            source=str(entry.path),
        )
        if sample.n_words == 0:
            skipped.append((str(entry.path), "no participant word tokens"))
            continue
        samples.append(sample)
    corpus = Corpus(samples=samples, split_role=manifest.split_role, skipped=skipped)
    log.info("loaded %d samples (MCI=%d, CONTROL=%d), skipped %d",
             len(samples), *corpus.class_counts, len(skipped))
    return corpus
