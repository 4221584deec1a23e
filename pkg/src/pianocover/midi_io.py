"""Standard MIDI File reading and writing."""

import logging
import struct
from dataclasses import dataclass
from typing import Optional

from .errors import MidiParseError
from .records import HIGHEST_PITCH, LOWEST_PITCH, MidiNote, ParsedMidi

logger = logging.getLogger(__name__)

DEFAULT_TEMPO = 500_000  # microseconds per quarter note (120 BPM)
WRITE_TICKS_PER_BEAT = 500  # 1000 ticks per second at 120 BPM, so a 16 ms frame is 16 ticks

# Data bytes following each channel-message status nibble
_CHANNEL_MSG_LEN = {
    0x80: 2,  # note off
    0x90: 2,  # note on
    0xA0: 2,  # polyphonic key pressure
    0xB0: 2,  # control change
    0xC0: 1,  # program change
    0xD0: 1,  # channel pressure
    0xE0: 2,  # pitch bend
}


@dataclass
class _RawNote:
    start_tick: int
    end_tick: int
    pitch: int
    velocity: int


class _Reader:
    """Cursor over the file bytes that reports absolute offsets on failure."""

    def __init__(self, data: bytes, pos: int = 0, end: Optional[int] = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def need(self, n: int, what: str) -> None:
        if self.pos + n > self.end:
            raise MidiParseError(f"truncated {what}", self.pos)

    def u8(self, what: str = "byte") -> int:
        self.need(1, what)
        value = self.data[self.pos]
        self.pos += 1
        return value

    def u16(self, what: str) -> int:
        self.need(2, what)
        (value,) = struct.unpack_from(">H", self.data, self.pos)
        self.pos += 2
        return value

    def u32(self, what: str) -> int:
        self.need(4, what)
        (value,) = struct.unpack_from(">I", self.data, self.pos)
        self.pos += 4
        return value

    def raw(self, n: int, what: str) -> bytes:
        self.need(n, what)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def varlen(self, what: str = "variable-length quantity") -> int:
        start = self.pos
        value = 0
        for _ in range(4):
            byte = self.u8(what)
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        raise MidiParseError(f"{what} longer than 4 bytes", start)


class MidiReader:
    """Decode note events from format 0/1 Standard MIDI Files."""

    def read(self, data: bytes) -> ParsedMidi:
        """
        Parse a Standard MIDI File.

        Args:
            data: Complete file content

        Returns:
            ParsedMidi with notes sorted by onset time

        Raises:
            MidiParseError: On a malformed header or truncated track
        """
        reader = _Reader(data)
        midi_format, n_tracks, division = self._read_header(reader)

        tempo_events: list[tuple[int, int]] = []
        raw_notes: list[_RawNote] = []
        result = ParsedMidi(notes=[], midi_format=midi_format, n_tracks=n_tracks)

        tracks_read = 0
        while tracks_read < n_tracks and reader.pos < len(data):
            chunk_start = reader.pos
            chunk_id = reader.raw(4, "chunk id")
            length = reader.u32("chunk length")
            if reader.pos + length > len(data):
                raise MidiParseError(f"truncated track: chunk declares {length} bytes", chunk_start)
            if chunk_id != b"MTrk":
                # Unknown chunk types are skipped
                reader.pos += length
                continue
            track = _Reader(data, reader.pos, reader.pos + length)
            self._read_track(track, tempo_events, raw_notes, result)
            reader.pos += length
            tracks_read += 1

        if tracks_read < n_tracks:
            raise MidiParseError(
                f"truncated file: header declares {n_tracks} tracks, found {tracks_read}", reader.pos
            )

        to_seconds = self._tick_converter(division, tempo_events)
        notes = []
        for raw in raw_notes:
            onset = to_seconds(raw.start_tick)
            offset = to_seconds(raw.end_tick)
            if offset <= onset:
                continue
            notes.append(MidiNote(onset, offset, raw.pitch, raw.velocity))
        notes.sort(key=lambda n: (n.onset_time, n.pitch))
        result.notes = notes
        result.ticks_per_beat = division if not division & 0x8000 else 0
        return result

    def _read_header(self, reader: _Reader) -> tuple[int, int, int]:
        if reader.raw(4, "header chunk id") != b"MThd":
            raise MidiParseError("missing MThd header", 0)
        length = reader.u32("header length")
        if length < 6:
            raise MidiParseError(f"header length {length} is shorter than 6", 4)
        midi_format = reader.u16("header format")
        n_tracks = reader.u16("header track count")
        division = reader.u16("header division")
        if midi_format not in (0, 1):
            raise MidiParseError(f"unsupported MIDI format {midi_format}", 8)
        if division == 0:
            raise MidiParseError("zero time division", 12)
        reader.pos = 8 + length
        if reader.pos > len(reader.data):
            raise MidiParseError("truncated header", len(reader.data))
        return midi_format, n_tracks, division

    def _read_track(
        self,
        track: _Reader,
        tempo_events: list[tuple[int, int]],
        raw_notes: list[_RawNote],
        result: ParsedMidi,
    ) -> None:
        tick = 0
        status: Optional[int] = None
        active: dict[tuple[int, int], tuple[int, int]] = {}

        def close(key: tuple[int, int], end_tick: int) -> None:
            start_tick, velocity = active.pop(key)
            raw_notes.append(_RawNote(start_tick, end_tick, key[1], velocity))

        while track.pos < track.end:
            tick += track.varlen("delta time")
            event_pos = track.pos
            first = track.u8("event status")

            if first == 0xFF:
                meta_type = track.u8("meta type")
                length = track.varlen("meta length")
                payload = track.raw(length, "meta event")
                if meta_type == 0x51 and length == 3:
                    tempo_events.append((tick, int.from_bytes(payload, "big")))
                elif meta_type == 0x2F:
                    break
                elif meta_type == 0x03:
                    result.metadata.setdefault("track_names", []).append(
                        payload.decode("latin-1", errors="replace")
                    )
                continue
            if first in (0xF0, 0xF7):
                length = track.varlen("sysex length")
                track.raw(length, "sysex event")
                continue
            if 0xF1 <= first <= 0xFE:
                raise MidiParseError(f"unexpected system message 0x{first:02X} in track", event_pos)

            if first & 0x80:
                status = first
                data1 = track.u8("channel message data")
            else:
                if status is None:
                    raise MidiParseError("running status without a previous status byte", event_pos)
                data1 = first
            kind = status & 0xF0
            channel = status & 0x0F
            data2 = track.u8("channel message data") if _CHANNEL_MSG_LEN[kind] == 2 else 0

            if kind not in (0x80, 0x90):
                continue

            pitch, velocity = data1, data2
            key = (channel, pitch)
            if kind == 0x90 and velocity > 0:
                if not LOWEST_PITCH <= pitch <= HIGHEST_PITCH:
                    result.dropped_out_of_range += 1
                    continue
                if key in active:
                    close(key, tick)  # re-strike ends the sounding note
                active[key] = (tick, velocity)
            elif key in active:
                close(key, tick)
            elif LOWEST_PITCH <= pitch <= HIGHEST_PITCH:
                result.unmatched_note_offs += 1

        for key in list(active):
            close(key, tick)

    @staticmethod
    def _tick_converter(division: int, tempo_events: list[tuple[int, int]]):
        if division & 0x8000:
            fps = 256 - (division >> 8)  # two's complement SMPTE frame rate
            ticks_per_frame = division & 0xFF
            seconds_per_tick = 1.0 / (fps * ticks_per_frame)
            return lambda t: t * seconds_per_tick

        # Piecewise-linear tempo map: (start tick, start seconds, seconds per tick)
        segments = [(0, 0.0, DEFAULT_TEMPO / 1e6 / division)]
        for tick, tempo in sorted(tempo_events):
            last_tick, last_sec, last_rate = segments[-1]
            start_sec = last_sec + (tick - last_tick) * last_rate
            if tick == last_tick:
                segments[-1] = (tick, last_sec, tempo / 1e6 / division)
            else:
                segments.append((tick, start_sec, tempo / 1e6 / division))

        def to_seconds(t: int) -> float:
            seg = segments[0]
            for candidate in segments:
                if candidate[0] > t:
                    break
                seg = candidate
            return seg[1] + (t - seg[0]) * seg[2]

        return to_seconds


def decode_midi(data: bytes) -> ParsedMidi:
    """Parse SMF bytes, keeping statistics such as the out-of-range drop count."""
    parsed = MidiReader().read(data)
    if parsed.dropped_out_of_range:
        logger.warning("Dropped %d notes outside the piano range", parsed.dropped_out_of_range)
    return parsed


def parse_midi(data: bytes) -> list[MidiNote]:
    """Parse SMF bytes into piano notes sorted by onset time."""
    return decode_midi(data).notes


def _varlen(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def write_midi(notes: list[MidiNote], ticks_per_beat: int = WRITE_TICKS_PER_BEAT) -> bytes:
    """
    Encode notes as a format-0 Standard MIDI File at 120 BPM.

    Args:
        notes: Notes to write (channel 0)
        ticks_per_beat: Time division

    Returns:
        File content
    """
    ticks_per_second = ticks_per_beat * 1e6 / DEFAULT_TEMPO

    # (tick, order, bytes): note-offs sort before note-ons at the same tick
    events: list[tuple[int, int, bytes]] = []
    for note in notes:
        on = int(round(note.onset_time * ticks_per_second))
        off = max(on + 1, int(round(note.offset_time * ticks_per_second)))
        events.append((on, 1, bytes([0x90, note.pitch, note.velocity])))
        events.append((off, 0, bytes([0x80, note.pitch, 0])))
    events.sort(key=lambda e: (e[0], e[1], e[2][1]))

    body = bytearray()
    body += _varlen(0) + b"\xff\x51\x03" + DEFAULT_TEMPO.to_bytes(3, "big")
    last = 0
    for tick, _order, message in events:
        body += _varlen(tick - last) + message
        last = tick
    body += _varlen(0) + b"\xff\x2f\x00"

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, ticks_per_beat)
    return header + b"MTrk" + struct.pack(">I", len(body)) + bytes(body)
