"""Medley transition dataset pipeline and symbolic-music evaluation metrics."""
from .augment import horizontal_windows, transpose, vertical_variants
from .core import (
    MedleyError,
    NoteEvent,
    RollShape,
    ScoreDocument,
    Song,
    TransitionPoint,
    TransitionSample,
)
from .distances import Histogram, total_variation, wasserstein_1d
from .filtering import FilterConfig, beat_ok, filter_transitions, is_vivid, make_sample, slice_sample
from .metrics import (
    dissonant_ratio,
    interval_match_regularizer,
    normalized_score,
    note_combination_distribution,
    repetition_score,
    silent_ratio,
    variety_score,
)
from .musicxml import parse_mxl
from .pianoroll import NoteSlice, PianoRoll, decode, encode, normalize_holds
from .repeats import expand_repeats
from .smf import parse_midi, write_midi
from .transitions import Blacklist, ConfusionMatrix, evaluate_labels, extract_transitions

__version__ = "0.1.0"
