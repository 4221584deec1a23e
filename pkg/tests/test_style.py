"""Tests for style vector extraction."""

import numpy as np
import pytest
from scipy.stats import norm

from pianocover.errors import EmptyCoverError
from pianocover.records import FrameGrid, MidiNote, StyleVector
from pianocover.style import (
    BIN_EDGES,
    average_style_vectors,
    collect_samples,
    extract_style_vector,
    histogram_levels,
    quantize_block,
    select_by_density,
    zscore,
)


def evenly_spaced(n_notes: int, spacing: int, grid: FrameGrid, pitch: int = 60) -> list[MidiNote]:
    """n_notes back-to-back notes, each `spacing` frames long."""
    return [
        MidiNote(grid.frame_time(i * spacing), grid.frame_time((i + 1) * spacing), pitch, 80)
        for i in range(n_notes)
    ]


def random_cover(rng: np.random.Generator, n_notes: int = 40) -> list[MidiNote]:
    notes = []
    for _ in range(n_notes):
        onset = float(rng.uniform(0, 20))
        notes.append(
            MidiNote(
                onset,
                onset + float(rng.uniform(0.05, 1.0)),
                int(rng.integers(30, 90)),
                int(rng.integers(20, 110)),
            )
        )
    return notes


class TestCollectSamples:
    """Tests for raw sample gathering."""

    def test_onset_rate_single_segment(self, grid: FrameGrid):
        """64 onsets inside one full 512-frame segment give a rate of 0.125."""
        samples = collect_samples(evenly_spaced(64, 8, grid), grid)
        assert samples.onset_rates == [pytest.approx(0.125)]

    def test_velocities_and_pitches(self):
        """Velocities and pitches are collected per note."""
        notes = [MidiNote(0.0, 0.5, 60, 80), MidiNote(0.5, 1.0, 64, 100)]
        samples = collect_samples(notes)

        assert samples.velocities == [80, 100]
        assert samples.pitches == [60, 64]

    def test_three_segments(self, grid: FrameGrid):
        """A cover spanning three segments has three onset rates."""
        notes = [MidiNote(0.0, 1.0, 60, 80), MidiNote(10.0, 11.0, 62, 80), MidiNote(20.0, 21.0, 64, 80)]
        assert len(collect_samples(notes, grid).onset_rates) == 3

    def test_partial_segment_denominator(self, grid: FrameGrid):
        """A trailing partial segment divides by its own frame count."""
        notes = evenly_spaced(96, 8, grid)  # 768 frames
        rates = collect_samples(notes, grid).onset_rates

        assert rates == [pytest.approx(64 / 512), pytest.approx(32 / 256)]

    def test_empty_cover(self):
        """An empty note list is rejected."""
        with pytest.raises(EmptyCoverError, match="empty cover"):
            collect_samples([])


class TestQuantize:
    """Tests for z-scoring and the 8-level histogram."""

    def test_bin_edges(self):
        """Edges are the fixed seven boundaries."""
        np.testing.assert_allclose(BIN_EDGES, [-2, -4 / 3, -2 / 3, 0, 2 / 3, 4 / 3, 2])

    def test_standardized_example(self):
        """Values -2.5, 0.1 and 1.9 land in levels 0, 4 and 6."""
        levels = histogram_levels([-2.5, 0.1, 1.9])
        np.testing.assert_allclose(levels, [1 / 3, 0, 0, 0, 1 / 3, 0, 1 / 3, 0])

    def test_right_closed_edges(self):
        """Boundary values fall into the lower level."""
        levels = histogram_levels([-2.0, 0.0, 2.0])
        np.testing.assert_allclose(levels, [1 / 3, 0, 0, 1 / 3, 0, 0, 1 / 3, 0])

    def test_constant_samples(self):
        """Zero spread puts all mass in level 3."""
        levels = quantize_block([70, 70, 70])
        np.testing.assert_array_equal(levels, [0, 0, 0, 1, 0, 0, 0, 0])

    def test_zscore_population_std(self):
        """Standardization divides by the population standard deviation."""
        z = zscore([1.0, 3.0])
        np.testing.assert_allclose(z, [-1.0, 1.0])

    def test_gaussian_masses(self):
        """Normal samples match the Gaussian mass of each interval."""
        samples = np.random.default_rng(7).standard_normal(10_000)
        levels = quantize_block(samples)

        bounds = np.concatenate([[-np.inf], BIN_EDGES, [np.inf]])
        expected = np.diff(norm.cdf(bounds))
        np.testing.assert_allclose(levels, expected, atol=0.02)

    def test_empty_samples(self):
        """Empty sample lists cannot be quantized."""
        with pytest.raises(ValueError):
            quantize_block([])


class TestExtractStyleVector:
    """Tests for the 24-dimensional style vector."""

    def test_blocks_sum_to_one(self, rng: np.random.Generator):
        """Each block is a probability vector."""
        vector = extract_style_vector(random_cover(rng))

        for block in (vector.onset_rate, vector.velocity, vector.pitch):
            assert np.all(block >= 0)
            assert block.sum() == pytest.approx(1.0, abs=1e-9)

    def test_single_note(self):
        """A single note gives one-hot level 3 velocity and pitch blocks."""
        vector = extract_style_vector([MidiNote(0.0, 1.0, 60, 80)])
        one_hot = [0, 0, 0, 1, 0, 0, 0, 0]

        np.testing.assert_array_equal(vector.velocity, one_hot)
        np.testing.assert_array_equal(vector.pitch, one_hot)

    def test_octave_transposition(self, rng: np.random.Generator):
        """Transposing the whole cover leaves the pitch block unchanged."""
        notes = random_cover(rng)
        shifted = [MidiNote(n.onset_time, n.offset_time, n.pitch + 12, n.velocity) for n in notes]

        np.testing.assert_array_equal(extract_style_vector(notes).pitch, extract_style_vector(shifted).pitch)

    @pytest.mark.parametrize("seed", range(5))
    def test_velocity_shift_invariance(self, seed: int):
        """Adding a constant to all velocities does not change the vector."""
        notes = random_cover(np.random.default_rng(seed))
        louder = [MidiNote(n.onset_time, n.offset_time, n.pitch, n.velocity + 15) for n in notes]

        np.testing.assert_array_equal(extract_style_vector(notes).values, extract_style_vector(louder).values)

    def test_permutation_invariance(self, rng: np.random.Generator):
        """Note order does not matter."""
        notes = random_cover(rng)
        shuffled = [notes[i] for i in rng.permutation(len(notes))]

        np.testing.assert_array_equal(extract_style_vector(notes).values, extract_style_vector(shuffled).values)

    def test_deterministic(self, small_cover: list[MidiNote]):
        """Repeated extraction is bit-identical."""
        a = extract_style_vector(small_cover)
        b = extract_style_vector(small_cover)
        assert a.values.tobytes() == b.values.tobytes()


class TestStyleVectorRecord:
    """Tests for StyleVector serialization."""

    def test_json_round_trip(self, small_cover: list[MidiNote]):
        """JSON keeps the three named blocks."""
        vector = extract_style_vector(small_cover)
        restored = StyleVector.from_json(vector.to_json())

        np.testing.assert_array_equal(restored.values, vector.values)
        assert set(vector.to_dict()) == {"onset_rate", "velocity", "pitch"}

    def test_missing_block(self):
        """A JSON object without all three blocks is rejected."""
        with pytest.raises(ValueError, match="pitch"):
            StyleVector.from_dict({"onset_rate": [0] * 8, "velocity": [0] * 8})

    def test_wrong_length(self):
        """Style vectors have exactly 24 values."""
        with pytest.raises(ValueError):
            StyleVector(np.zeros(23))


class TestAveraging:
    """Tests for calm/intense averaging."""

    def test_average_keeps_probability_blocks(self, rng: np.random.Generator):
        """The mean of style vectors still has unit-mass blocks."""
        vectors = [extract_style_vector(random_cover(rng)) for _ in range(4)]
        mean = average_style_vectors(vectors)

        for block in (mean.onset_rate, mean.velocity, mean.pitch):
            assert block.sum() == pytest.approx(1.0)

    def test_average_empty(self):
        """Averaging nothing is an error."""
        with pytest.raises(ValueError):
            average_style_vectors([])

    def test_select_by_density(self):
        """The sparsest covers are calm and the densest intense."""
        covers = [[None] * n for n in (5, 1, 9, 3)]
        calm, intense = select_by_density(covers, 2)

        assert calm == [1, 3]
        assert intense == [2, 0]
