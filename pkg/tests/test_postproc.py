"""Tests for inference-time note cleanup."""

import pytest

from pianocover.config import PostprocConfig
from pianocover.postproc import clean_notes, decode_and_clean
from pianocover.records import FrameGrid, MidiNote
from pianocover.roll import notes_to_tensors


class TestCleanNotes:
    def test_short_note_removed(self):
        assert clean_notes([MidiNote(0.0, 0.05, 60, 80)]) == []

    def test_exact_minimum_kept(self):
        notes = [MidiNote(0.0, 0.08, 60, 80)]
        assert clean_notes(notes) == notes

    def test_grid_durations(self, grid: FrameGrid):
        """Five frames (0.08 s) survive; four frames do not."""
        five = MidiNote(grid.frame_time(10), grid.frame_time(15), 60, 80)
        four = MidiNote(grid.frame_time(20), grid.frame_time(24), 62, 80)
        assert clean_notes([five, four]) == [five]

    def test_disabled(self):
        notes = [MidiNote(0.0, 0.01, 60, 80), MidiNote(0.5, 0.52, 61, 80)]
        assert clean_notes(notes, PostprocConfig(min_note_seconds=0.0)) == notes

    def test_order_preserved(self):
        notes = [
            MidiNote(0.3, 0.6, 64, 80),
            MidiNote(0.0, 0.01, 60, 80),
            MidiNote(0.1, 0.5, 72, 80),
        ]
        assert clean_notes(notes) == [notes[0], notes[2]]

    def test_idempotent(self, small_cover):
        once = clean_notes(small_cover, PostprocConfig(min_note_seconds=0.55))
        assert clean_notes(once, PostprocConfig(min_note_seconds=0.55)) == once


class TestDecodeAndClean:
    def test_round_trip(self, grid: FrameGrid):
        """Notes of at least five frames survive decoding and cleanup."""
        notes = [
            MidiNote(grid.frame_time(0), grid.frame_time(10), 60, 80),
            MidiNote(grid.frame_time(12), grid.frame_time(17), 64, 100),
        ]
        assert decode_and_clean(notes_to_tensors(notes, 0, grid)) == notes

    def test_short_decoded_note_dropped(self, grid: FrameGrid):
        notes = [
            MidiNote(grid.frame_time(0), grid.frame_time(10), 60, 80),
            MidiNote(grid.frame_time(30), grid.frame_time(34), 67, 90),
        ]
        assert decode_and_clean(notes_to_tensors(notes, 0, grid)) == notes[:1]

    def test_threshold_from_config(self, grid: FrameGrid):
        tensors = notes_to_tensors([MidiNote(0.0, grid.frame_time(10), 60, 80)], 0, grid)
        tensors.onsets *= 0.6
        tensors.frames *= 0.6

        assert len(decode_and_clean(tensors, PostprocConfig(onset_threshold=0.5))) == 1
        assert decode_and_clean(tensors, PostprocConfig(onset_threshold=0.7)) == []

    def test_segment_offset(self, grid: FrameGrid):
        tensors = notes_to_tensors([MidiNote(grid.frame_time(4), grid.frame_time(12), 60, 80)], 0, grid)
        (note,) = decode_and_clean(tensors, segment_start=512)
        assert note.onset_time == pytest.approx(516 * 0.016)

    def test_previous_onsets_passed_through(self, grid: FrameGrid):
        notes = [MidiNote(grid.frame_time(512), grid.frame_time(530), 60, 80)]
        first = notes_to_tensors(notes, 0, grid)
        second = notes_to_tensors(notes, 512, grid)

        (note,) = decode_and_clean(second, segment_start=512, previous_onsets=first.onsets[-1])
        assert note.onset_time == pytest.approx(512 * 0.016)
