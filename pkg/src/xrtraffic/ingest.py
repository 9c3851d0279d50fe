"""Packet-log reassembly and the plain-text frame-trace format.

Frame-trace file::

    # content: Virus Popper
    # source_id: vp-30-60
    # rate_bps: 30000000
    # fps: 60
    index,nominal_time_s,size_bytes
    0,0,62513
    1,0.016666666666666666,61877

Packet log (one fragment per row)::

    timestamp,frame_id,payload_bytes,direction,kind
    0.000113,7,1278,downlink,video

Both are ``\\n``-terminated, ``.`` decimal separator, no thousands separators.
Floats are written with ``repr`` so a write/read round trip is bit-exact.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import Iterable, Sequence
import warnings

import numpy as np

from .errors import EmptyStreamError, ParseError
from .trace import FrameTrace, TraceMeta

log = logging.getLogger(__name__)

DIRECTIONS = ("downlink", "uplink")
KINDS = ("video", "feedback", "tracking", "other")
PACKET_COLUMNS = ("timestamp", "frame_id", "payload_bytes", "direction", "kind")
TRACE_COLUMNS = ("index", "nominal_time_s", "size_bytes")

# UDP payload of a full video fragment in the reference captures
VIDEO_FRAGMENT_PAYLOAD = 1278


class ReassemblyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PacketRecord:
    timestamp: float
    frame_id: int
    payload_bytes: int
    direction: str = "downlink"
    kind: str = "video"

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError(f"payload_bytes must be > 0, got {self.payload_bytes}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class FrameAssembly:
    frame_id: int
    total_bytes: int
    fragment_count: int
    first_ts: float
    last_ts: float


@dataclass
class Reassembly:
    """Result of :func:`reassemble`: the trace plus per-frame detail and diagnostics."""

    trace: FrameTrace
    frames: list[FrameAssembly]
    diagnostics: list[str] = field(default_factory=list)
    missing_frame_ids: list[int] = field(default_factory=list)


def reassemble(packets: Iterable[PacketRecord], meta: TraceMeta) -> Reassembly:
    """Group downlink video fragments by frame id.

    Frames are ordered by the timestamp of their first fragment. Out-of-order
    frame ids and gaps in the id sequence are reported, never repaired.
    """
    groups: "OrderedDict[int, list]" = OrderedDict()
    seen_any = False
    for pkt in packets:
        seen_any = True
        if pkt.direction != "downlink" or pkt.kind != "video":
            continue
        g = groups.get(pkt.frame_id)
        if g is None:
            groups[pkt.frame_id] = [pkt.payload_bytes, 1, pkt.timestamp, pkt.timestamp]
        else:
            g[0] += pkt.payload_bytes
            g[1] += 1
            g[2] = min(g[2], pkt.timestamp)
            g[3] = max(g[3], pkt.timestamp)
    if not seen_any:
        raise EmptyStreamError("packet log is empty")
    if not groups:
        raise EmptyStreamError("packet log contains no downlink video packets")

    frames = [FrameAssembly(fid, g[0], g[1], g[2], g[3]) for fid, g in groups.items()]
    diagnostics = []
    by_time = sorted(frames, key=lambda f: (f.first_ts, f.frame_id))
    ids = [f.frame_id for f in by_time]
    inversions = sum(1 for a, b in zip(ids, ids[1:]) if b < a)
    if inversions:
        diagnostics.append(f"reordering: {inversions} frame id(s) decrease in first-timestamp order")
    missing = sorted(set(range(min(ids), max(ids) + 1)) - set(ids))
    if missing:
        diagnostics.append(f"gaps: {len(missing)} frame id(s) absent between {min(ids)} and {max(ids)}")
    for msg in diagnostics:
        log.warning(msg)

    sizes = np.array([f.total_bytes for f in by_time], dtype=float)
    return Reassembly(FrameTrace(meta, sizes), by_time, diagnostics, missing)


def reassemble_frames(packets: Sequence[PacketRecord], meta: TraceMeta) -> FrameTrace:
    """Frame trace from a packet log; diagnostics are emitted as :class:`ReassemblyWarning`."""
    result = reassemble(packets, meta)
    for msg in result.diagnostics:
        warnings.warn(msg, ReassemblyWarning, stacklevel=2)
    return result.trace


# --- text formats -----------------------------------------------------------

def format_number(x) -> str:
    """Shortest text that parses back to the same float; integral values print without '.0'."""
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(x)


def _parse_float(text, path, lineno, column):
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, lineno, f"column {column!r}: not a number: {text!r}") from None


def _read_header(lines, path):
    """Split ``# key: value`` header lines from the body. Returns (header, first body line index)."""
    header = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if body:
            if ":" not in body:
                raise ParseError(path, i + 1, f"malformed header line {lines[i]!r} (expected '# key: value')")
            key, value = body.split(":", 1)
            header[key.strip()] = value.strip()
        i += 1
    return header, i


def write_frame_trace(trace: FrameTrace, path) -> None:
    m = trace.meta
    out = [
        f"# content: {m.content_label}",
        f"# source_id: {m.source_id}",
        f"# rate_bps: {format_number(m.target_rate)}",
        f"# fps: {format_number(m.frame_rate)}",
        ",".join(TRACE_COLUMNS),
    ]
    phi = m.frame_rate
    for i, size in enumerate(trace.sizes):
        out.append(f"{i},{format_number(i / phi)},{format_number(size)}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")


def read_frame_trace(path) -> FrameTrace:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header, i = _read_header(lines, path)
    for key in ("content", "rate_bps", "fps"):
        if key not in header:
            raise ParseError(path, None, f"missing header field {key!r}")
    rate = _parse_float(header["rate_bps"], path, None, "rate_bps")
    fps = _parse_float(header["fps"], path, None, "fps")
    try:
        meta = TraceMeta(header["content"], rate, fps, header.get("source_id", ""))
    except ValueError as exc:
        raise ParseError(path, None, str(exc)) from None

    if i >= len(lines):
        raise ParseError(path, i + 1, "missing column header row")
    columns = [c.strip() for c in lines[i].split(",")]
    missing = [c for c in TRACE_COLUMNS if c not in columns]
    if missing:
        raise ParseError(path, i + 1, f"missing column(s): {', '.join(missing)}")
    col = columns.index("size_bytes")
    sizes = []
    for lineno in range(i + 2, len(lines) + 1):
        line = lines[lineno - 1]
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(columns):
            raise ParseError(path, lineno, f"expected {len(columns)} fields, got {len(fields)}")
        size = _parse_float(fields[col], path, lineno, "size_bytes")
        if not size > 0:
            raise ParseError(path, lineno, f"frame size must be > 0, got {fields[col]!r}")
        sizes.append(size)
    if not sizes:
        raise ParseError(path, len(lines), "no frame rows")
    return FrameTrace(meta, np.array(sizes))


def write_packet_log(packets: Iterable[PacketRecord], path) -> None:
    out = [",".join(PACKET_COLUMNS)]
    for p in packets:
        out.append(f"{format_number(p.timestamp)},{p.frame_id},{p.payload_bytes},{p.direction},{p.kind}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")


def read_packet_log(path) -> list[PacketRecord]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    _, i = _read_header(lines, path)
    if i >= len(lines):
        raise ParseError(path, i + 1, "missing column header row")
    columns = [c.strip() for c in lines[i].split(",")]
    missing = [c for c in PACKET_COLUMNS if c not in columns]
    if missing:
        raise ParseError(path, i + 1, f"missing column(s): {', '.join(missing)}")
    idx = {c: columns.index(c) for c in PACKET_COLUMNS}
    packets = []
    last_ts = -np.inf
    for lineno in range(i + 2, len(lines) + 1):
        line = lines[lineno - 1]
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(columns):
            raise ParseError(path, lineno, f"expected {len(columns)} fields, got {len(fields)}")
        ts = _parse_float(fields[idx["timestamp"]], path, lineno, "timestamp")
        if ts < last_ts:
            raise ParseError(path, lineno, f"timestamp {ts} decreases (previous {last_ts})")
        last_ts = ts
        try:
            packets.append(PacketRecord(
                ts,
                int(fields[idx["frame_id"]]),
                int(fields[idx["payload_bytes"]]),
                fields[idx["direction"]],
                fields[idx["kind"]],
            ))
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return packets
