import random

import numpy as np
import pytest
from hypothesis import settings
import hypothesis.strategies as st

from medleykit.pianoroll import NoteSlice, SliceNote, encode
from medleykit.synthetic import synthetic_corpus

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@st.composite
def note_slices(draw, max_voices=4, n_bars=None, min_pitch=1, max_pitch=128):
    """Grid-quantized slices with at most ``max_voices`` notes sounding at once.

    Notes are laid out voice by voice as non-overlapping runs, so the
    polyphony bound holds by construction.
    """
    b = n_bars or draw(st.integers(1, 3))
    total = b * 16
    notes = []
    for _ in range(draw(st.integers(0, max_voices))):
        t = draw(st.integers(0, 4))
        while t < total:
            length = draw(st.integers(1, min(8, total - t)))
            notes.append(SliceNote(t, draw(st.integers(min_pitch, max_pitch)), length))
            t += length + draw(st.integers(0, 3))
    return NoteSlice(n_bars=b, notes=tuple(notes))


@st.composite
def doubled_rolls(draw, n_bars=None, voices=None, min_pitch=1, max_pitch=128):
    """Consistent doubled-scheme rolls produced by the encoder."""
    v = voices or draw(st.integers(1, 4))
    sl = draw(note_slices(max_voices=v, n_bars=n_bars, min_pitch=min_pitch, max_pitch=max_pitch))
    return encode(sl, v)


@st.composite
def raw_grids(draw, n_bars=None, voices=None):
    """Arbitrary doubled-scheme cell grids, holds not necessarily consistent."""
    b = n_bars or draw(st.integers(1, 3))
    v = voices or draw(st.integers(1, 4))
    cells = draw(st.lists(st.sampled_from([0, 0, 0, 1, 60, 61, 72, 128, 129, 188, 200, 256]),
                          min_size=b * 16 * v, max_size=b * 16 * v))
    return np.array(cells, dtype=np.int16).reshape(b, 16, v)


@pytest.fixture(scope="session")
def corpus():
    return synthetic_corpus()


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory, corpus):
    from medleykit.synthetic import write_corpus
    directory = tmp_path_factory.mktemp("synthetic")
    write_corpus(corpus, directory)
    return directory


def random_slice(rng: random.Random, n_bars=12, voices=3, density=0.5) -> NoteSlice:
    """Plain-random counterpart of :func:`note_slices` for corpus building."""
    notes = []
    total = n_bars * 16
    for _ in range(voices):
        t = 0
        while t < total:
            length = rng.randint(1, 8)
            if rng.random() < density:
                notes.append(SliceNote(t, rng.randint(40, 90), min(length, total - t)))
            t += length
    return NoteSlice(n_bars=n_bars, notes=tuple(notes))
