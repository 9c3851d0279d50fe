"""Local cache of the public trace corpus.

``XRTRAFFIC_DATA`` selects the cache directory (default ``~/.cache/xrtraffic``)
and ``XRTRAFFIC_DATASET_URL`` the archive to download. Only files in the
canonical frame-trace format are loaded as corpus members; raw packet logs
must be converted first with ``xrtraffic ingest``.
"""
from __future__ import annotations

import logging
import os
from pathlib import Path
import shutil
import tarfile
import tempfile
import urllib.request
import zipfile

from .errors import ParseError
from .ingest import read_frame_trace

log = logging.getLogger(__name__)

DEFAULT_URL = "https://github.com/signetlabdei/vr-trace-analysis/archive/HEAD.zip"


def cache_dir() -> Path:
    return Path(os.environ.get("XRTRAFFIC_DATA", Path.home() / ".cache" / "xrtraffic")).expanduser()


def dataset_url() -> str:
    return os.environ.get("XRTRAFFIC_DATASET_URL", DEFAULT_URL)


def fetch_dataset(url: str | None = None, dest: Path | None = None, timeout: float = 60.0) -> Path:
    """Download and unpack the trace archive into ``dest``; returns the directory."""
    url = url or dataset_url()
    dest = Path(dest) if dest else cache_dir()
    dest.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        archive = Path(tmp) / "archive"
        log.info("downloading %s", url)
        with urllib.request.urlopen(url, timeout=timeout) as resp, open(archive, "wb") as fh:
            shutil.copyfileobj(resp, fh)
        if zipfile.is_zipfile(archive):
            with zipfile.ZipFile(archive) as zf:
                zf.extractall(dest)
        elif tarfile.is_tarfile(archive):
            with tarfile.open(archive) as tf:
                tf.extractall(dest, filter="data")
        else:
            shutil.copy(archive, dest / Path(url).name)
    return dest


def load_corpus(root: Path | None = None) -> list:
    """Every readable frame-trace file under ``root``, sorted by path."""
    root = Path(root) if root else cache_dir()
    if not root.is_dir():
        return []
    traces = []
    for path in sorted(p for p in root.rglob("*") if p.suffix in (".csv", ".txt") and p.is_file()):
        try:
            traces.append(read_frame_trace(path))
        except (ParseError, ValueError, UnicodeDecodeError):
            log.debug("skipping %s: not a frame-trace file", path)
    return traces


def find_trace(corpus, content: str, target_rate: float, frame_rate: float):
    """First trace whose label contains ``content`` (case-insensitive) at the given R and fps, else None."""
    needle = content.lower().replace(" ", "")
    for tr in corpus:
        m = tr.meta
        if needle in m.content_label.lower().replace(" ", "") and \
                abs(m.target_rate - target_rate) < 1e-6 * target_rate and abs(m.frame_rate - frame_rate) < 1e-9:
            return tr
    return None
