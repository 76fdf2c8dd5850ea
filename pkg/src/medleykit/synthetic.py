"""Synthetic medleys with planted transition annotations.

Every medley is generated in step coordinates (4/4 bars of 16 sixteenth
steps) and written out as an MXL + MIDI pair.  The expected transition
records are computed here from the step layout alone, so they serve as an
oracle for the parsing and extraction code rather than a replay of it.
"""
from __future__ import annotations

import io
import json
import random
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from .core import NoteEvent, Song, midi_key_to_pitch
from .smf import write_midi

TPQ = 480
STEPS = 16
STEP_TICKS = TPQ // 4
BAR_TICKS = STEPS * STEP_TICKS

TITLES = (
    "super mario bros", "Tetris Theme", "Green Hill Zone", "Song of Storms",
    "Gerudo Valley", "Corridors of Time", "Bloody Tears", "Dire Dire Docks",
    "Moonlight Harbor", "Lost Woods", "Still Alive", "Big Blue", "Mute City",
    "Wily Castle", "Aquatic Ambience", "Snake Eater", "Vampire Killer",
    "Hyrule Field", "Clock Town", "Windmill Hut", "Kass Theme", "Pallet Town",
    "Cerulean City", "Battle Arena", "Sky Garden",
)
DECOYS = ("vivante", "allegro", "12", "Allegro", "rit.", "♩ = 120", "mf", "a tempo")
TEMPOS = (500_000, 597_200, 461_538, 545_455, 428_571)
KEYS = ("C major", "G major", "D major", "F major", "A minor", "E minor", "Bb major")


@dataclass(frozen=True)
class StepNote:
    """A note placed on the global 16th grid; ``bar`` is a playback bar (1-based)."""

    bar: int
    step: int
    length: int
    key: int
    track: int

    @property
    def start(self) -> int:
        return (self.bar - 1) * STEPS + self.step

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass
class SyntheticMedley:
    name: str
    n_real_bars: int
    repeat: tuple = None  # (forward bar, backward bar) in notation bars
    bar_tempos: list = field(default_factory=list)  # microseconds per quarter, per playback bar
    bar_keys: list = field(default_factory=list)  # key name per playback bar
    notes: list = field(default_factory=list)
    annotations: dict = field(default_factory=dict)  # notation bar -> list of texts
    planted: dict = field(default_factory=dict)  # notation bar -> accepted text
    programs: dict = field(default_factory=dict)

    @property
    def playback_order(self) -> list:
        bars = list(range(1, self.n_real_bars + 1))
        if not self.repeat:
            return bars
        fwd, back = self.repeat
        return bars[:back] + bars[fwd - 1:back] + bars[back:]

    @property
    def n_playback_bars(self) -> int:
        return len(self.playback_order)

    def first_offset(self, bar_real: int) -> int:
        return self.playback_order.index(bar_real) + 1

    # ---- independent ground truth ------------------------------------------
    def step_seconds(self, bar: int) -> float:
        return self.bar_tempos[bar - 1] / 4e6

    def seconds_at_step(self, global_step: int) -> float:
        bar, step = divmod(global_step, STEPS)
        return sum(STEPS * self.step_seconds(b) for b in range(1, bar + 1)) + (
            step * self.step_seconds(bar + 1) if bar < self.n_playback_bars else 0.0
        )

    def expected_record(self, bar_real: int) -> dict:
        """The transition record a correct extractor should emit (epsilon 0)."""
        offset = self.first_offset(bar_real)
        tp = (offset - 1) * STEPS
        during = [n for n in self.notes if n.start <= tp < n.end]
        lengths = [self.seconds_at_step(n.end) - self.seconds_at_step(n.start) for n in during]
        halves = [0, 0, 0, 0]
        for n in self.notes:
            if n.bar == offset - 1:
                halves[n.step // 8] += 1
            elif n.bar == offset:
                halves[2 + n.step // 8] += 1
        return {
            "song_id": self.name,
            "text": self.planted[bar_real],
            "bar_real": bar_real,
            "bar_offset": offset,
            "time_seconds": self.seconds_at_step(tp),
            "notes_during": len(during),
            "avg_note_length_seconds": sum(lengths) / len(lengths) if lengths else 0.0,
            "notes_before_bar": halves[0] + halves[1],
            "notes_after_bar": halves[2] + halves[3],
            "half_bar_starts": halves,
        }

    def expected_records(self) -> list:
        return [self.expected_record(bar) for bar in sorted(self.planted)]

    def tempo_change_count(self) -> int:
        return sum(1 for a, b in zip(self.bar_tempos, self.bar_tempos[1:]) if a != b)

    def key_change_count(self) -> int:
        return sum(1 for a, b in zip(self.bar_keys, self.bar_keys[1:]) if a != b)

    # ---- serialization -----------------------------------------------------
    def to_song(self) -> Song:
        notes = tuple(
            NoteEvent(onset=n.start * STEP_TICKS, pitch=midi_key_to_pitch(n.key),
                      duration=n.length * STEP_TICKS, velocity=80, track=n.track)
            for n in self.notes
        )
        tempos = [((b - 1) * BAR_TICKS, t) for b, t in enumerate(self.bar_tempos, start=1)
                  if b == 1 or t != self.bar_tempos[b - 2]]
        keys = [((b - 1) * BAR_TICKS, k) for b, k in enumerate(self.bar_keys, start=1)
                if b == 1 or k != self.bar_keys[b - 2]]
        return Song(
            ticks_per_quarter=TPQ,
            notes=notes,
            tempo_map=tuple(tempos),
            time_signatures=((0, 4, 4),),
            key_signatures=tuple(keys),
            programs=dict(self.programs),
            title=self.name,
            length_ticks=self.n_playback_bars * BAR_TICKS,
        )

    def midi_bytes(self) -> bytes:
        return write_midi(self.to_song())

    def musicxml(self) -> str:
        parts = ['<?xml version="1.0" encoding="UTF-8"?>',
                 '<score-partwise version="3.1">',
                 f"<work><work-title>{escape(self.name)}</work-title></work>",
                 '<part-list><score-part id="P1"><part-name>Lead</part-name></score-part></part-list>',
                 '<part id="P1">']
        for bar in range(1, self.n_real_bars + 1):
            parts.append(f'<measure number="{bar}">')
            if self.repeat and bar == self.repeat[0]:
                parts.append('<barline location="left"><bar-style>heavy-light</bar-style>'
                             '<repeat direction="forward"/></barline>')
            if bar == 1:
                parts.append("<attributes><divisions>1</divisions><time><beats>4</beats>"
                             "<beat-type>4</beat-type></time></attributes>")
            for text in self.annotations.get(bar, []):
                parts.append('<direction placement="above"><direction-type>'
                             f"<words>{escape(text)}</words></direction-type></direction>")
            parts.append('<note><rest measure="yes"/><duration>4</duration></note>')
            if self.repeat and bar == self.repeat[1]:
                parts.append('<barline location="right"><bar-style>light-heavy</bar-style>'
                             '<repeat direction="backward"/></barline>')
            parts.append("</measure>")
        parts += ["</part>", "</score-partwise>"]
        return "\n".join(parts)

    def mxl_bytes(self) -> bytes:
        container = ('<?xml version="1.0" encoding="UTF-8"?>\n<container><rootfiles>'
                     '<rootfile full-path="score.musicxml" media-type="application/vnd.recordare.musicxml+xml"/>'
                     "</rootfiles></container>")
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as z:
            z.writestr(zipfile.ZipInfo("mimetype", date_time=(2000, 1, 1, 0, 0, 0)),
                       "application/vnd.recordare.musicxml")
            z.writestr(zipfile.ZipInfo("META-INF/container.xml", date_time=(2000, 1, 1, 0, 0, 0)), container)
            z.writestr(zipfile.ZipInfo("score.musicxml", date_time=(2000, 1, 1, 0, 0, 0)), self.musicxml())
        return buf.getvalue()

    def write(self, directory) -> tuple:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        mxl = directory / f"{self.name}.mxl"
        mid = directory / f"{self.name}.mid"
        mxl.write_bytes(self.mxl_bytes())
        mid.write_bytes(self.midi_bytes())
        return mxl, mid


def _monophonic_line(rng, n_bars, track, lengths, low, high, silent_bars, rest_prob=0.15):
    notes = []
    pos = 0
    key = rng.randint(low, high)
    total = n_bars * STEPS
    while pos < total:
        length = min(rng.choice(lengths), total - pos)
        bar = pos // STEPS + 1
        if bar in silent_bars or rng.random() < rest_prob:
            pos += length
            continue
        end = pos + length
        # a note may not reach into a silent bar
        while (end - 1) // STEPS + 1 in silent_bars:
            end -= 1
        key = min(high, max(low, key + rng.randint(-4, 4)))
        notes.append(StepNote(bar, pos % STEPS, end - pos, key, track))
        pos += length
    return notes


def random_medley(rng: random.Random, name: str, n_real_bars: int = 40,
                  n_transitions: int = 3, repeat: tuple = None) -> SyntheticMedley:
    """A medley with ``n_transitions`` planted titles and a few decoy annotations."""
    medley = SyntheticMedley(name=name, n_real_bars=n_real_bars, repeat=repeat)
    n_play = medley.n_playback_bars
    candidates = list(range(2, n_real_bars + 1))
    rng.shuffle(candidates)
    transitions = sorted(candidates[:n_transitions])
    decoy_bars = candidates[n_transitions:n_transitions + 3]

    for bar in transitions:
        medley.planted[bar] = rng.choice(TITLES)
        medley.annotations[bar] = [medley.planted[bar]]
    for bar in decoy_bars:
        medley.annotations[bar] = [rng.choice(DECOYS)]
    # a decoy sharing a bar with a real title must not leak into the record
    medley.annotations[transitions[0]].insert(0, rng.choice(DECOYS))

    starts = sorted({medley.first_offset(b) for b in transitions})
    tempo, key = rng.choice(TEMPOS), rng.choice(KEYS)
    for bar in range(1, n_play + 1):
        if bar in starts:
            if rng.random() < 0.35:
                tempo = rng.choice(TEMPOS)
            if rng.random() < 0.5:
                key = rng.choice(KEYS)
        medley.bar_tempos.append(tempo)
        medley.bar_keys.append(key)

    silent = {b for b in range(1, n_play + 1) if rng.random() < 0.05}
    medley.notes = (
        _monophonic_line(rng, n_play, 1, (1, 2, 2, 3, 4, 6, 8), 60, 84, silent)
        + _monophonic_line(rng, n_play, 2, (4, 8, 12), 36, 55, silent, rest_prob=0.1)
    )
    medley.programs = {1: rng.choice((0, 1, 4, 24, 40, 56, 73, 80)), 2: rng.choice((32, 33, 38, 42))}
    return medley


def appendix_medley(name: str = "medley_000") -> SyntheticMedley:
    """A repeat-bearing medley whose transition at notation bar 23 plays at bar 27.

    Bars 5..8 are repeated once, so bars after 8 shift by four.  At the
    transition, five sixteenth-note chord tones sound at 597200 us per
    quarter, the bar before has five onsets and the bar after twenty-five.
    """
    rng = random.Random(1014546)
    medley = random_medley(rng, name, n_real_bars=36, n_transitions=2, repeat=(5, 8))
    medley.planted = {bar: text for bar, text in medley.planted.items() if bar != 23}
    for bar in list(medley.annotations):
        if bar == 23 or (bar in (22, 24) and bar not in medley.planted):
            del medley.annotations[bar]
    medley.planted[23] = "super mario bros"
    medley.annotations[23] = ["super mario bros"]

    for bar in range(22, 33):
        medley.bar_tempos[bar - 1] = 597_200
    before, tp = 26, 27
    window_lo, window_hi = (before - 1) * STEPS, tp * STEPS
    medley.notes = [n for n in medley.notes if not (n.end > window_lo and n.start < window_hi)]
    melody_before = [(0, 4, 67), (4, 4, 69), (8, 4, 71), (12, 2, 72), (14, 2, 74)]
    medley.notes += [StepNote(before, s, ln, k, 1) for s, ln, k in melody_before]
    medley.notes += [StepNote(tp, 0, 1, k, 3) for k in (60, 64, 67, 72, 76)]
    medley.notes += [StepNote(tp, 8, 2, k, 3) for k in (62, 65)]
    medley.notes += [StepNote(tp, s, 1, 72 + s % 5, 1) for s in range(1, 16)]
    medley.notes += [StepNote(tp, s, 4, 40 + s // 4, 2) for s in (4, 8, 12)]
    medley.programs[3] = 0
    return medley


def synthetic_corpus(n: int = 20, seed: int = 7) -> list:
    """``n`` medleys; the first one is :func:`appendix_medley`."""
    rng = random.Random(seed)
    corpus = [appendix_medley()]
    for i in range(1, n):
        repeat = (3, 6) if i % 5 == 0 else None
        corpus.append(random_medley(rng, f"medley_{i:03d}", n_real_bars=rng.randint(28, 44),
                                    n_transitions=rng.randint(2, 4), repeat=repeat))
    return corpus


def write_corpus(corpus, directory) -> Path:
    """Write MXL/MIDI pairs plus ``ground_truth.jsonl`` into ``directory``."""
    directory = Path(directory)
    lines = []
    for medley in corpus:
        medley.write(directory)
        lines.extend(json.dumps(r, sort_keys=True) for r in medley.expected_records())
    truth = directory / "ground_truth.jsonl"
    truth.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return truth
