"""Timestamped binary waveforms.

A PulseTrain is the common currency of the codecs, LED emission and
photodetector sampling.  Times are integer nanoseconds so that encode/decode
round trips are bit-exact and platform independent.  The edge list states the
level the line takes at each time; the first edge defines the starting level
and consecutive edges alternate.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_right
from dataclasses import dataclass


@dataclass(frozen=True)
class PulseTrain:
    edges: tuple          # ((time_ns, level), ...) level is 0 or 1
    duration_ns: int

    def __post_init__(self):
        last_t = -1
        last_level = None
        for t, level in self.edges:
            if level not in (0, 1):
                raise ValueError(f"level must be 0 or 1, got {level!r}")
            if t <= last_t:
                raise ValueError("edge times must be strictly increasing")
            if t < 0:
                raise ValueError("edge times must be >= 0")
            if last_level is not None and level == last_level:
                raise ValueError("levels must alternate between edges")
            last_t, last_level = t, level
        if self.edges and self.duration_ns < self.edges[-1][0]:
            raise ValueError("duration must cover the last edge")

    @classmethod
    def from_runs(cls, runs, start_ns: int = 0) -> "PulseTrain":
        """Build from (level, duration_ns) runs; adjacent equal levels merge."""
        edges = []
        t = start_ns
        for level, dur in runs:
            if dur < 0:
                raise ValueError("run duration must be >= 0")
            if dur == 0:
                continue
            if not edges or edges[-1][1] != level:
                edges.append((t, level))
            t += dur
        return cls(tuple(edges), t)

    @property
    def times(self) -> tuple:
        return tuple(t for t, _ in self.edges)

    def level_at(self, t_ns: int) -> int:
        """Line level at time t; before the first edge the line idles low."""
        if not self.edges:
            return 0
        i = bisect_right(self.times, t_ns) - 1
        if i < 0:
            return 0
        return self.edges[i][1]

    def runs(self):
        """Yield (level, duration_ns) from the first edge to duration."""
        for i, (t, level) in enumerate(self.edges):
            end = self.edges[i + 1][0] if i + 1 < len(self.edges) else self.duration_ns
            yield level, end - t

    def transitions(self) -> tuple:
        """Times of actual level changes (everything after the first edge)."""
        return tuple(t for t, _ in self.edges[1:])

    def shifted(self, offset_ns: int) -> "PulseTrain":
        return PulseTrain(tuple((t + offset_ns, lv) for t, lv in self.edges),
                          self.duration_ns + offset_ns)

    def to_csv(self, stream) -> None:
        writer = csv.writer(stream)
        writer.writerow(["time_ns", "level"])
        for t, level in self.edges:
            writer.writerow([t, level])
        writer.writerow([self.duration_ns, "end"])

    @classmethod
    def from_csv(cls, stream) -> "PulseTrain":
        reader = csv.reader(stream)
        header = next(reader, None)
        if header != ["time_ns", "level"]:
            raise ValueError("waveform CSV must start with 'time_ns,level'")
        edges = []
        duration = 0
        for row in reader:
            if not row:
                continue
            if row[1] == "end":
                duration = int(row[0])
            else:
                edges.append((int(row[0]), int(row[1])))
        if not duration and edges:
            duration = edges[-1][0]
        return cls(tuple(edges), duration)

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()
