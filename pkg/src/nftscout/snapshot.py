"""Immutable site snapshots: fetching, fingerprints, and the corpus store.

A snapshot captures one candidate URL: final HTML payload plus same-origin
scripts. Snapshots are content-addressed by (url, html, scripts), so
storing is idempotent and the corpus deduplicates naturally. The 64-bit
content fingerprint hashes the multiset of case-folded alphanumeric tokens
(per-token blake2b-64 summed mod 2^64; empty content maps to 0), and
change detection compares token *sets* with Jaccard similarity.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urljoin, urlsplit

from .timefmt import parse_rfc3339, to_rfc3339

NULL_FINGERPRINT = 0
_FP_MASK = (1 << 64) - 1

_TOKEN_RE = re.compile(rb"[a-z0-9]+")
_SCRIPT_SRC_RE = re.compile(
    rb"<script\b[^>]*?\bsrc\s*=\s*[\"']([^\"'>]+)[\"']", re.IGNORECASE
)

TRANSPORT_FAILURES = ("dns_failure", "timeout", "tls_failure", "connection_failure")


class SnapshotNotFound(KeyError):
    """No snapshot with the requested id in the corpus."""


@dataclass(frozen=True)
class FetchLimits:
    max_bytes: int = 5 * 1024 * 1024
    timeout: float = 20.0
    max_scripts: int = 10


@dataclass(frozen=True)
class SiteSnapshot:
    url: str
    fetched_at: datetime
    status: int | str  # HTTP status code or a TRANSPORT_FAILURES marker
    html: bytes
    scripts: tuple[tuple[str, bytes], ...] = ()
    truncated: bool = False
    final_url: str | None = None

    @property
    def ok(self) -> bool:
        return isinstance(self.status, int) and 200 <= self.status < 400

    @property
    def snapshot_id(self) -> str:
        return compute_snapshot_id(self.url, self.html, self.scripts)

    @property
    def fingerprint(self) -> int:
        return content_fingerprint(self)


def _content_blobs(snapshot: SiteSnapshot):
    yield snapshot.html
    for _, payload in snapshot.scripts:
        yield payload


def tokenize(blob: bytes) -> list[bytes]:
    """Case-folded alphanumeric tokens of a byte payload."""
    return _TOKEN_RE.findall(blob.lower())


def token_set(snapshot: SiteSnapshot) -> frozenset[bytes]:
    out: set[bytes] = set()
    for blob in _content_blobs(snapshot):
        out.update(tokenize(blob))
    return frozenset(out)


def _token_hash(token: bytes) -> int:
    return int.from_bytes(
        hashlib.blake2b(token, digest_size=8).digest(), "big"
    )


def content_fingerprint(snapshot: SiteSnapshot) -> int:
    """64-bit multiset hash of the snapshot's tokens; time-independent."""
    acc = 0
    for blob in _content_blobs(snapshot):
        for token in tokenize(blob):
            acc = (acc + _token_hash(token)) & _FP_MASK
    return acc


def jaccard(a: SiteSnapshot, b: SiteSnapshot) -> float:
    """Token-set Jaccard similarity in [0, 1]; 1.0 for two empty snapshots."""
    sa, sb = token_set(a), token_set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def compute_snapshot_id(url: str, html: bytes, scripts) -> str:
    """Content-addressed id: sha256 over length-framed (url, html, scripts)."""
    h = hashlib.sha256()

    def frame(data: bytes):
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)

    frame(url.encode("utf-8"))
    frame(html)
    for script_url, payload in scripts:
        frame(script_url.encode("utf-8"))
        frame(payload)
    return h.hexdigest()


def _same_origin(base_url: str, target_url: str) -> bool:
    b, t = urlsplit(base_url), urlsplit(target_url)
    return (b.scheme, b.netloc) == (t.scheme, t.netloc)


def extract_script_urls(html: bytes, base_url: str) -> list[str]:
    """Absolute same-origin <script src> targets, in document order."""
    out: list[str] = []
    for raw in _SCRIPT_SRC_RE.findall(html):
        try:
            target = urljoin(base_url, raw.decode("utf-8", "replace").strip())
        except ValueError:
            continue
        if _same_origin(base_url, target) and target not in out:
            out.append(target)
    return out


def _classify_transport_error(exc: Exception) -> str:
    import requests

    if isinstance(exc, requests.exceptions.SSLError):
        return "tls_failure"
    if isinstance(exc, requests.exceptions.Timeout):
        return "timeout"
    text = str(exc)
    if "Name or service not known" in text or "getaddrinfo" in text or "NameResolutionError" in text:
        return "dns_failure"
    return "connection_failure"


def _read_limited(response, max_bytes: int) -> tuple[bytes, bool]:
    body = b""
    for chunk in response.iter_content(chunk_size=65536):
        body += chunk
        if len(body) > max_bytes:
            return body[:max_bytes], True
    return body, False


def fetch_snapshot(
    url: str,
    limits: FetchLimits = FetchLimits(),
    *,
    fetched_at: datetime | None = None,
) -> SiteSnapshot:
    """Fetch a page and its same-origin scripts into a snapshot.

    Transport failures never raise; they produce a snapshot whose status is
    a failure marker and whose payload is empty, so liveness accounting can
    treat fetch outcomes uniformly. Redirects are followed up to 5 hops.
    """
    import requests

    scheme = urlsplit(url).scheme
    if scheme not in ("http", "https"):
        raise ValueError(f"unsupported URL scheme: {url!r}")
    now = fetched_at or datetime.now(timezone.utc)

    session = requests.Session()
    session.max_redirects = 5
    try:
        resp = session.get(url, timeout=limits.timeout, stream=True)
        html, truncated = _read_limited(resp, limits.max_bytes)
        status: int | str = resp.status_code
        final_url = resp.url
    except requests.exceptions.RequestException as exc:
        return SiteSnapshot(
            url=url,
            fetched_at=now,
            status=_classify_transport_error(exc),
            html=b"",
            final_url=None,
        )
    finally:
        session.close()

    scripts: list[tuple[str, bytes]] = []
    for script_url in extract_script_urls(html, final_url)[: limits.max_scripts]:
        try:
            s_resp = requests.get(script_url, timeout=limits.timeout, stream=True)
            payload, _ = _read_limited(s_resp, limits.max_bytes)
        except requests.exceptions.RequestException:
            continue
        scripts.append((script_url, payload))

    return SiteSnapshot(
        url=url,
        fetched_at=now,
        status=status,
        html=html,
        scripts=tuple(scripts),
        truncated=truncated,
        final_url=final_url,
    )


def store_snapshot(corpus: str | Path, snapshot: SiteSnapshot) -> str:
    """Write a snapshot under corpus/<snapshot_id>/; idempotent by content."""
    corpus = Path(corpus)
    corpus.mkdir(parents=True, exist_ok=True)
    sid = snapshot.snapshot_id
    dest = corpus / sid
    if dest.exists():
        return sid

    tmp = Path(tempfile.mkdtemp(prefix=f".{sid[:12]}-", dir=corpus))
    try:
        meta = {
            "snapshot_id": sid,
            "url": snapshot.url,
            "fetched_at": to_rfc3339(snapshot.fetched_at),
            "status": snapshot.status,
            "truncated": snapshot.truncated,
            "final_url": snapshot.final_url,
            "scripts": [u for u, _ in snapshot.scripts],
            "content_fingerprint": snapshot.fingerprint,
        }
        (tmp / "meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (tmp / "page.html").write_bytes(snapshot.html)
        if snapshot.scripts:
            (tmp / "scripts").mkdir()
            for i, (_, payload) in enumerate(snapshot.scripts):
                (tmp / "scripts" / f"{i}.js").write_bytes(payload)
        try:
            os.replace(tmp, dest)
        except OSError:
            if not dest.exists():  # lost a benign race only if dest now exists
                raise
    finally:
        if tmp.exists() and tmp != dest:
            import shutil

            shutil.rmtree(tmp, ignore_errors=True)
    return sid


def load_snapshot(corpus: str | Path, snapshot_id: str) -> SiteSnapshot:
    root = Path(corpus) / snapshot_id
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise SnapshotNotFound(snapshot_id)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    html = (root / "page.html").read_bytes()
    scripts = []
    for i, script_url in enumerate(meta.get("scripts", [])):
        scripts.append((script_url, (root / "scripts" / f"{i}.js").read_bytes()))
    return SiteSnapshot(
        url=meta["url"],
        fetched_at=parse_rfc3339(meta["fetched_at"]),
        status=meta["status"],
        html=html,
        scripts=tuple(scripts),
        truncated=meta.get("truncated", False),
        final_url=meta.get("final_url"),
    )


def iter_snapshot_ids(corpus: str | Path) -> list[str]:
    corpus = Path(corpus)
    if not corpus.exists():
        return []
    return sorted(
        p.name for p in corpus.iterdir() if (p / "meta.json").exists()
    )


__all__ = [
    "NULL_FINGERPRINT",
    "TRANSPORT_FAILURES",
    "FetchLimits",
    "SiteSnapshot",
    "SnapshotNotFound",
    "compute_snapshot_id",
    "content_fingerprint",
    "extract_script_urls",
    "fetch_snapshot",
    "iter_snapshot_ids",
    "jaccard",
    "load_snapshot",
    "store_snapshot",
    "token_set",
    "tokenize",
]
