import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from nftscout.snapshot import (
    NULL_FINGERPRINT,
    FetchLimits,
    SiteSnapshot,
    SnapshotNotFound,
    compute_snapshot_id,
    content_fingerprint,
    extract_script_urls,
    fetch_snapshot,
    jaccard,
    load_snapshot,
    store_snapshot,
)

T0 = datetime(2022, 10, 12, tzinfo=timezone.utc)
T1 = datetime(2022, 10, 13, tzinfo=timezone.utc)


def snap(html=b"<html>hello world</html>", scripts=(), url="https://x.com/", at=T0):
    return SiteSnapshot(url=url, fetched_at=at, status=200, html=html, scripts=scripts)


def test_fingerprint_ignores_fetch_time():
    assert snap(at=T0).fingerprint == snap(at=T1).fingerprint


def test_fingerprint_null_constant():
    assert snap(html=b"").fingerprint == NULL_FINGERPRINT == 0


def test_fingerprint_sensitive_to_one_token():
    a = snap(html=b"alpha beta gamma")
    b = snap(html=b"alpha beta delta")
    assert a.fingerprint != b.fingerprint


def test_fingerprint_counts_multiplicity():
    assert snap(html=b"token token").fingerprint != snap(html=b"token").fingerprint


def test_fingerprint_case_folded():
    assert snap(html=b"Hello WORLD").fingerprint == snap(html=b"hello world").fingerprint


def test_jaccard_properties():
    a, b = snap(html=b"one two three"), snap(html=b"two three four")
    assert jaccard(a, a) == 1.0
    assert jaccard(a, b) == jaccard(b, a)
    assert 0.0 <= jaccard(a, b) <= 1.0
    assert jaccard(a, b) == 2 / 4
    assert jaccard(snap(html=b""), snap(html=b"")) == 1.0


def test_content_addressing():
    s1 = snap(html=b"same", at=T0)
    s2 = snap(html=b"same", at=T1)
    assert s1.snapshot_id == s2.snapshot_id
    assert snap(html=b"other").snapshot_id != s1.snapshot_id
    # scripts participate in the id
    with_script = snap(scripts=(("https://x.com/a.js", b"x"),))
    assert with_script.snapshot_id != snap().snapshot_id


def test_id_framing_is_unambiguous():
    a = compute_snapshot_id("u", b"ab", (("s", b"c"),))
    b = compute_snapshot_id("u", b"a", (("bs", b"c"),))
    assert a != b


def test_store_load_roundtrip(tmp_path):
    s = snap(
        html=b"<html><body>mint</body></html>",
        scripts=(("https://x.com/a.js", b"var a=1;"), ("https://x.com/b.js", b"")),
    )
    sid = store_snapshot(tmp_path, s)
    assert load_snapshot(tmp_path, sid) == s


def test_store_idempotent(tmp_path):
    s = snap()
    assert store_snapshot(tmp_path, s) == store_snapshot(tmp_path, s)


def test_load_unknown_id(tmp_path):
    with pytest.raises(SnapshotNotFound):
        load_snapshot(tmp_path, "0" * 64)


def test_transport_failure_status_roundtrips(tmp_path):
    s = SiteSnapshot(
        url="https://dead.example/", fetched_at=T0, status="timeout", html=b""
    )
    sid = store_snapshot(tmp_path, s)
    assert load_snapshot(tmp_path, sid).status == "timeout"


def test_extract_script_urls_same_origin_only():
    html = (
        b'<script src="/a.js"></script>'
        b'<script SRC="https://x.com/b.js"></script>'
        b'<script src="https://cdn.other.com/c.js"></script>'
        b'<script>inline()</script>'
    )
    assert extract_script_urls(html, "https://x.com/") == [
        "https://x.com/a.js",
        "https://x.com/b.js",
    ]


class _Handler(BaseHTTPRequestHandler):
    def do_GET(self):
        if self.path == "/redirect":
            self.send_response(302)
            self.send_header("Location", "/")
            self.end_headers()
            return
        routes = {
            "/": b'<html><script src="/one.js"></script>'
                 b'<script src="/two.js"></script>body</html>',
            "/one.js": b"var one = 1;",
            "/two.js": b"var two = 2;",
            "/big": b"x" * 4096,
        }
        body = routes.get(self.path)
        if body is None:
            self.send_response(404)
            self.end_headers()
            return
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def http_base():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_fetch_with_scripts(http_base):
    s = fetch_snapshot(f"{http_base}/", FetchLimits(max_scripts=10, timeout=5))
    assert s.status == 200
    assert len(s.scripts) == 2
    assert s.scripts[0][1] == b"var one = 1;"
    assert not s.truncated


def test_fetch_respects_max_scripts(http_base):
    s = fetch_snapshot(f"{http_base}/", FetchLimits(max_scripts=1, timeout=5))
    assert len(s.scripts) == 1


def test_fetch_truncates_large_page(http_base):
    s = fetch_snapshot(f"{http_base}/big", FetchLimits(max_bytes=100, timeout=5))
    assert s.truncated
    assert len(s.html) == 100


def test_fetch_follows_redirect_and_records_final_url(http_base):
    s = fetch_snapshot(f"{http_base}/redirect", FetchLimits(timeout=5))
    assert s.status == 200
    assert s.final_url == f"{http_base}/"
    assert len(s.scripts) == 2  # scripts resolved against the final URL


def test_fetch_unreachable_yields_failure_snapshot():
    s = fetch_snapshot("http://127.0.0.1:1/", FetchLimits(timeout=2))
    assert isinstance(s.status, str)
    assert s.html == b""


def test_fetch_rejects_non_http():
    with pytest.raises(ValueError):
        fetch_snapshot("ftp://x.com/a")
