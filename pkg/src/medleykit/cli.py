"""Command-line driver: ``medley <command> ...``.

Every command reads and writes plain files (JSON lines, .mdlr rolls, CSV)
so the stages can be chained from a shell.  Exit codes: 0 success, 1 some
inputs failed, 2 fatal.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .augment import horizontal_windows, valid_shifts, vertical_variants
from .core import MedleyError, TransitionPoint, TransitionSample
from .filtering import FilterConfig, filter_transitions, slice_sample
from .metrics import METRIC_NAMES, normalized_score
from .musicxml import parse_mxl
from .pianoroll import NoteSlice, PianoRoll, SCHEMES, decode, encode, from_mdlr, to_mdlr
from .smf import parse_midi
from .stats import (
    corpus_summary,
    instrumentation_csv,
    instrumentation_distribution,
    note_histogram_csv,
    transition_note_histogram,
)
from .transitions import Blacklist, ConfusionMatrix, evaluate_labels, extract_transitions

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2
MIDI_SUFFIXES = (".mid", ".midi")


class NoInputFiles(MedleyError):
    pass


class UnpairedFile(UserWarning):
    pass


@dataclass(frozen=True)
class Settings:
    blacklist: str = ""
    tempo_tolerance_bpm: float = 0.5
    vivid_mode: str = "all4"
    n_splits: int = 50
    seed: int = 0
    epsilon_seconds: float = 0.0
    window_bars: int = 0


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; blank lines and ``#`` lines are skipped."""
    types = {f.name: f.type for f in fields(Settings)}
    casts = {"str": str, "float": float, "int": int}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in types:
            raise ValueError(f"{path}:{lineno}: expected one of {sorted(types)} as key=value")
        values[key] = casts[types[key]](value)
    return values


def resolve_settings(args) -> Settings:
    """Defaults, then the config file, then MEDLEY_SEED, then explicit flags."""
    settings = Settings()
    if getattr(args, "config", None):
        settings = replace(settings, **read_config(args.config))
    if os.environ.get("MEDLEY_SEED"):
        settings = replace(settings, seed=int(os.environ["MEDLEY_SEED"]))
    flags = {f.name: getattr(args, f.name) for f in fields(Settings)
             if getattr(args, f.name, None) is not None}
    return replace(settings, **flags)


def _blacklist(settings: Settings) -> Blacklist:
    return Blacklist.load(settings.blacklist) if settings.blacklist else Blacklist.default()


def _filter_config(settings: Settings) -> FilterConfig:
    return FilterConfig(tempo_tolerance_bpm=settings.tempo_tolerance_bpm, vivid_mode=settings.vivid_mode)


def _read_jsonl(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _dump(record) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def _write_lines(path, records):
    text = "".join(_dump(r) + "\n" for r in records)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _report_failures(path, failures):
    if failures:
        if path:
            _write_lines(path, failures)
        else:
            for f in failures:
                print(_dump(f), file=sys.stderr)


def _exit_code(n_ok: int, n_failed: int) -> int:
    if n_failed == 0:
        return EXIT_OK
    return EXIT_PARTIAL if n_ok else EXIT_FATAL


def _load_songs(midi_dir) -> dict:
    songs = {}
    for path in sorted(Path(midi_dir).iterdir()):
        if path.suffix.lower() in MIDI_SUFFIXES:
            songs[path.stem] = parse_midi(path.read_bytes(), title=path.stem)
    return songs


def _load_rolls(directory) -> list:
    paths = sorted(Path(directory).glob("*.mdlr"))
    if not paths:
        raise NoInputFiles(f"no .mdlr files in {directory}")
    return [from_mdlr(p.read_bytes()) for p in paths]


# ---- extract -------------------------------------------------------------------


def find_pairs(input_dir) -> list:
    """``(stem, mxl path, midi path)`` for every basename present in both formats."""
    directory = Path(input_dir)
    if not directory.is_dir():
        raise NoInputFiles(f"{directory} is not a directory")
    scores, midis = {}, {}
    for path in sorted(directory.iterdir()):
        suffix = path.suffix.lower()
        if suffix in (".mxl", ".musicxml", ".xml"):
            scores.setdefault(path.stem, path)
        elif suffix in MIDI_SUFFIXES:
            midis.setdefault(path.stem, path)
    if not scores and not midis:
        raise NoInputFiles(f"no .mxl or .mid files in {directory}")
    for stem in sorted(set(scores) ^ set(midis)):
        warnings.warn(UnpairedFile(f"{stem}: missing its {'MIDI' if stem in scores else 'score'} partner"))
    return [(stem, scores[stem], midis[stem]) for stem in sorted(set(scores) & set(midis))]


def _extract_one(job):
    stem, mxl_path, mid_path, blacklist, epsilon = job
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            doc = parse_mxl(Path(mxl_path).read_bytes())
            song = parse_midi(Path(mid_path).read_bytes(), title=stem)
            points = extract_transitions(doc, song, blacklist, song_id=stem, epsilon_seconds=epsilon)
        return [p.to_dict() for p in points], None
    except (MedleyError, ValueError, OSError) as exc:
        return [], {"song_id": stem, "reason": type(exc).__name__, "detail": str(exc)}


def cmd_extract(args) -> int:
    settings = resolve_settings(args)
    pairs = find_pairs(args.input_dir)
    if not pairs:
        raise NoInputFiles(f"no paired .mxl/.mid files in {args.input_dir}")
    blacklist = _blacklist(settings)
    jobs = [(stem, str(a), str(b), blacklist, settings.epsilon_seconds) for stem, a, b in pairs]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(job) for job in jobs]
    records = [r for recs, _ in results for r in recs]
    failures = [f for _, f in results if f]
    _write_lines(args.output, records)
    _report_failures(args.failures, failures)
    return _exit_code(len(pairs) - len(failures), len(failures))


# ---- filter --------------------------------------------------------------------


def cmd_filter(args) -> int:
    settings = resolve_settings(args)
    points = [TransitionPoint.from_dict(d) for d in _read_jsonl(args.transitions)]
    songs = _load_songs(args.midi_dir)
    kept, audit = filter_transitions(points, songs, _filter_config(settings))
    _write_lines(args.output, [p.to_dict() for p in kept])
    if args.audit:
        _write_lines(args.audit, audit)
    return EXIT_OK


# ---- encode --------------------------------------------------------------------


def cmd_encode(args) -> int:
    if args.decode:
        roll = from_mdlr(Path(args.decode).read_bytes())
        Path(args.output).write_text(_dump(decode(roll).to_dict()) + "\n", encoding="utf-8")
        return EXIT_OK
    if args.slice:
        noteslice = NoteSlice.from_dict(json.loads(Path(args.slice).read_text(encoding="utf-8")))
        Path(args.output).write_bytes(to_mdlr(encode(noteslice, args.voices, args.scheme)))
        return EXIT_OK
    if not (args.transitions and args.midi_dir):
        raise SystemExit("encode needs TRANSITIONS and --midi-dir, or --slice / --decode")
    settings = resolve_settings(args)
    config = _filter_config(settings)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    songs = _load_songs(args.midi_dir)
    index, failures = [], []
    points = [TransitionPoint.from_dict(d) for d in _read_jsonl(args.transitions)]
    for tp in points:
        context = {"song_id": tp.song_id, "bar_real": tp.bar_real, "bar_offset": tp.bar_offset}
        song = songs.get(tp.song_id)
        if song is None:
            failures.append({**context, "reason": "missing_song"})
            continue
        try:
            noteslice = slice_sample(song, tp.bar_offset, config, song_id=tp.song_id)
        except MedleyError as exc:
            failures.append({**context, "reason": type(exc).__name__, "detail": str(exc)})
            continue
        name = f"{tp.song_id}_b{tp.bar_offset:04d}.mdlr"
        (out_dir / name).write_bytes(to_mdlr(encode(noteslice, args.voices, args.scheme)))
        index.append({**context, "file": name, "tempo_bpm": noteslice.tempo_bpm})
    _write_lines(out_dir / "index.jsonl", index)
    _report_failures(args.failures, failures)
    return _exit_code(len(index), len(failures))


# ---- augment -------------------------------------------------------------------


def cmd_augment(args) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.windows:
        written = 0
        for stem, song in _load_songs(args.input).items():
            try:
                windows = horizontal_windows(song, width=args.width)
            except MedleyError as exc:
                print(_dump({"song_id": stem, "reason": type(exc).__name__}), file=sys.stderr)
                continue
            _write_lines(out_dir / f"{stem}_windows.jsonl", [w.to_dict() for w in windows])
            written += 1
        return EXIT_OK if written else EXIT_FATAL
    source = Path(args.input)
    paths = sorted(source.glob("*.mdlr")) if source.is_dir() else [source]
    if not paths:
        raise NoInputFiles(f"no .mdlr files in {source}")
    for path in paths:
        roll = from_mdlr(path.read_bytes())
        if roll.scheme != "doubled":
            raise MedleyError(f"{path}: transposition needs doubled-scheme rolls")
        sample = TransitionSample(roll.grid)
        for k, variant in zip(valid_shifts(sample.grid), vertical_variants(sample)):
            (out_dir / f"{path.stem}_t{k:+d}.mdlr").write_bytes(to_mdlr(PianoRoll(variant.grid)))
    return EXIT_OK


# ---- metrics -------------------------------------------------------------------


def cmd_metrics(args) -> int:
    settings = resolve_settings(args)
    generated = _load_rolls(args.generated)
    reference = _load_rolls(args.reference)
    names = METRIC_NAMES if args.metric == "all" else (args.metric,)
    reports = []
    for name in names:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = normalized_score(generated, reference, name, settings.n_splits, settings.seed)
        reports.append(report.to_dict())
    _write_lines(args.output, reports)
    return EXIT_OK


# ---- stats ---------------------------------------------------------------------


def cmd_stats(args) -> int:
    songs = list(_load_songs(args.midi_dir).values())
    if not songs:
        raise NoInputFiles(f"no MIDI files in {args.midi_dir}")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(_dump(corpus_summary(songs)) + "\n", encoding="utf-8")
    (out_dir / "instrumentation.csv").write_text(
        instrumentation_csv(instrumentation_distribution(songs)), encoding="utf-8")
    if args.samples_dir:
        hist = transition_note_histogram(_load_rolls(args.samples_dir))
        (out_dir / "transition_notes.csv").write_text(note_histogram_csv(hist), encoding="utf-8")
    return EXIT_OK


# ---- validate ------------------------------------------------------------------


def cmd_validate(args) -> int:
    settings = resolve_settings(args)
    if args.counts:
        counts = json.loads(Path(args.counts).read_text(encoding="utf-8"))
        matrix = ConfusionMatrix(**{k: int(counts[k]) for k in ("tp", "fp", "fn", "tn")})
    else:
        if not (args.predicted and args.truth):
            raise SystemExit("validate needs PREDICTED and TRUTH, or --counts")
        candidates = None
        if args.candidates:
            candidates = [(d["song_id"], d["bar_real"]) for d in _read_jsonl(args.candidates)]
        matrix = evaluate_labels(
            [TransitionPoint.from_dict(d) for d in _read_jsonl(args.predicted)],
            [(d["song_id"], d["bar_real"]) for d in _read_jsonl(args.truth)],
            window_bars=settings.window_bars,
            candidates=candidates,
        )
    _write_lines(args.output, [matrix.to_dict()])
    return EXIT_OK


# ---- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value settings file")

    parser = argparse.ArgumentParser(prog="medley", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="label transition points in MXL/MIDI pairs")
    p.add_argument("input_dir")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--blacklist")
    p.add_argument("--epsilon-seconds", dest="epsilon_seconds", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--failures", help="JSON-lines file for per-file failures (default: stderr)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("filter", parents=[common], help="keep vivid 4/4 steady-tempo transitions")
    p.add_argument("transitions")
    p.add_argument("--midi-dir", required=True)
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--audit", help="JSON-lines file for skipped transitions")
    p.add_argument("--tempo-tolerance-bpm", dest="tempo_tolerance_bpm", type=float)
    p.add_argument("--vivid-mode", dest="vivid_mode", choices=("all4", "any1"))
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("encode", parents=[common], help="slice transitions into .mdlr piano rolls")
    p.add_argument("transitions", nargs="?")
    p.add_argument("--midi-dir")
    p.add_argument("-o", "--output", required=True, help="output directory, or file with --slice/--decode")
    p.add_argument("--voices", type=int, default=3)
    p.add_argument("--scheme", choices=SCHEMES, default="doubled")
    p.add_argument("--slice", help="encode one NoteSlice JSON file instead")
    p.add_argument("--decode", help="decode one .mdlr file into NoteSlice JSON")
    p.add_argument("--failures")
    p.add_argument("--vivid-mode", dest="vivid_mode", choices=("all4", "any1"))
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("augment", help="write transposed variants or sliding windows")
    p.add_argument("input", help=".mdlr file or directory (MIDI directory with --windows)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--windows", action="store_true", help="horizontal windows over whole songs")
    p.add_argument("--width", type=int, default=12)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("metrics", parents=[common], help="normalized metric scores of generated rolls")
    p.add_argument("generated")
    p.add_argument("reference")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--metric", choices=("all",) + METRIC_NAMES, default="all")
    p.add_argument("--n-splits", dest="n_splits", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("stats", help="corpus statistics as JSON and CSV")
    p.add_argument("midi_dir")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--samples-dir", help="directory of .mdlr samples for the transition-note histogram")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", parents=[common], help="precision and recall of labeled transitions")
    p.add_argument("predicted", nargs="?")
    p.add_argument("truth", nargs="?")
    p.add_argument("--counts", help="JSON object with tp, fp, fn and tn")
    p.add_argument("--candidates", help="JSON-lines of annotated bars, for true negatives")
    p.add_argument("--window-bars", dest="window_bars", type=int)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoInputFiles as exc:
        print(f"medley {args.command}: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (MedleyError, ValueError, OSError) as exc:
        print(f"medley {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
