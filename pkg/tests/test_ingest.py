import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xrtraffic import FrameTrace, TraceMeta
from xrtraffic.errors import EmptyStreamError, ParseError
from xrtraffic.ingest import (
    VIDEO_FRAGMENT_PAYLOAD,
    PacketRecord,
    ReassemblyWarning,
    reassemble,
    reassemble_frames,
    read_frame_trace,
    read_packet_log,
    write_frame_trace,
    write_packet_log,
)

META = TraceMeta("Virus Popper", 30e6, 60.0, "vp")


def test_three_fragments_make_one_frame():
    pkts = [PacketRecord(0.001 * i, 7, VIDEO_FRAGMENT_PAYLOAD) for i in range(3)]
    tr = reassemble_frames(pkts, META)
    assert len(tr) == 1
    assert tr.sizes[0] == 3 * 1278 == 3834


def test_uplink_and_non_video_excluded():
    pkts = [
        PacketRecord(0.000, 0, 1000),
        PacketRecord(0.001, 0, 64, direction="uplink", kind="tracking"),
        PacketRecord(0.002, 0, 500),
        PacketRecord(0.003, 1, 32, kind="feedback"),
        PacketRecord(0.017, 1, 900),
    ]
    tr = reassemble_frames(pkts, META)
    assert np.array_equal(tr.sizes, [1500.0, 900.0])


def test_single_fragment_frames_allowed():
    tr = reassemble_frames([PacketRecord(0.0, 0, 10), PacketRecord(0.02, 1, 20)], META)
    assert np.array_equal(tr.sizes, [10.0, 20.0])


def test_gaps_and_reordering_reported():
    pkts = [PacketRecord(0.0, 0, 10), PacketRecord(0.01, 3, 10), PacketRecord(0.02, 2, 10)]
    res = reassemble(pkts, META)
    assert res.missing_frame_ids == [1]
    assert any("gaps" in d for d in res.diagnostics)
    assert any("reordering" in d for d in res.diagnostics)
    with pytest.warns(ReassemblyWarning):
        reassemble_frames(pkts, META)


def test_empty_streams():
    with pytest.raises(EmptyStreamError):
        reassemble([], META)
    with pytest.raises(EmptyStreamError):
        reassemble([PacketRecord(0.0, 0, 10, direction="uplink")], META)


def test_packet_record_validation():
    with pytest.raises(ValueError):
        PacketRecord(0.0, 0, 0)
    with pytest.raises(ValueError):
        PacketRecord(0.0, 0, 1, direction="sideways")


packet_lists = st.lists(
    st.tuples(st.integers(0, 20), st.integers(1, 3000),
              st.sampled_from([("downlink", "video"), ("uplink", "tracking"), ("downlink", "feedback")])),
    min_size=1, max_size=80,
)


def _packets(spec):
    # timestamps increase with frame id so frame order is well defined
    return [PacketRecord(fid * 0.01 + 1e-6 * i, fid, size, *dk) for i, (fid, size, dk) in enumerate(spec)]


@given(packet_lists)
def test_byte_conservation(spec):
    pkts = _packets(spec)
    video = sum(p.payload_bytes for p in pkts if p.direction == "downlink" and p.kind == "video")
    if video == 0:
        with pytest.raises(EmptyStreamError):
            reassemble(pkts, META)
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = reassemble_frames(pkts, META)
    assert tr.sizes.sum() == video


@given(packet_lists, st.randoms())
def test_permutation_within_frame_invariant(spec, rnd):
    pkts = _packets(spec)
    if not any(p.direction == "downlink" and p.kind == "video" for p in pkts):
        return
    # shuffle fragments inside each frame while keeping each frame's timestamp slots
    by_frame = {}
    for i, p in enumerate(pkts):
        by_frame.setdefault(p.frame_id, []).append(i)
    shuffled = list(pkts)
    for idxs in by_frame.values():
        perm = list(idxs)
        rnd.shuffle(perm)
        for dst, src in zip(idxs, perm):
            p = pkts[src]
            shuffled[dst] = PacketRecord(pkts[dst].timestamp, p.frame_id, p.payload_bytes, p.direction, p.kind)
    a = reassemble(pkts, META).trace
    b = reassemble(shuffled, META).trace
    assert a == b


def test_frame_trace_round_trip(tmp_path):
    tr = FrameTrace(META, np.array([62513.0, 61877.5, 0.1 + 0.2]))
    path = tmp_path / "t.csv"
    write_frame_trace(tr, path)
    back = read_frame_trace(path)
    assert back == tr
    assert back.meta.target_rate == 30e6 and back.meta.frame_rate == 60.0
    assert back.meta.content_label == "Virus Popper" and back.meta.source_id == "vp"
    text = path.read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")
    assert text.splitlines()[4] == b"index,nominal_time_s,size_bytes"


TRACE_HEAD = "# content: x\n# rate_bps: 30000000\n# fps: 60\nindex,nominal_time_s,size_bytes\n"


@pytest.mark.parametrize("body,line,fragment", [
    ("0,0,100\n1,0.0166,0\n", 6, "> 0"),
    ("0,0,100\n1,0.0166,-5\n", 6, "> 0"),
    ("0,0,abc\n", 5, "not a number"),
    ("0,0\n", 5, "fields"),
    ("", 4, "no frame rows"),
])
def test_frame_trace_errors_name_line(tmp_path, body, line, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(TRACE_HEAD + body)
    with pytest.raises(ParseError) as ei:
        read_frame_trace(path)
    assert ei.value.line == line
    assert f"bad.csv:{line}:" in str(ei.value)
    assert fragment in str(ei.value)


def test_frame_trace_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# content: x\n# fps: 60\nindex,nominal_time_s,size_bytes\n0,0,1\n")
    with pytest.raises(ParseError, match="rate_bps"):
        read_frame_trace(path)


def test_packet_log_round_trip_and_errors(tmp_path):
    pkts = [PacketRecord(0.000113, 7, 1278), PacketRecord(0.0002, 7, 640, "uplink", "tracking")]
    path = tmp_path / "log.csv"
    write_packet_log(pkts, path)
    assert read_packet_log(path) == pkts
    path.write_text("timestamp,frame_id,payload_bytes,direction,kind\n0.5,1,10,downlink,video\n"
                    "0.4,2,10,downlink,video\n")
    with pytest.raises(ParseError) as ei:
        read_packet_log(path)
    assert ei.value.line == 3
