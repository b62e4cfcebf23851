import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from stericzipper.exceptions import FetchError
from stericzipper.fetch import FetchConfig, cache_path, fetch_entry, normalize_id
from stericzipper.pdb_io import parse_pdb
from stericzipper.synthetic import template_path

PAYLOAD = template_path().read_text()


class _Archive(BaseHTTPRequestHandler):
    hits: list[str] = []

    def do_GET(self):
        type(self).hits.append(self.path)
        if self.path.endswith("/1ABC.pdb"):
            body = PAYLOAD.encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_error(404)

    def log_message(self, *args):
        pass


@pytest.fixture()
def archive():
    _Archive.hits = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Archive)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/download", _Archive.hits
    server.shutdown()
    server.server_close()


def _dead_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_download_then_cache(archive, tmp_path):
    url, hits = archive
    cfg = FetchConfig(base_url=url, cache_dir=tmp_path)
    text = fetch_entry(cfg, "1ABC")
    assert text == PAYLOAD
    assert hits == ["/download/1ABC.pdb"]
    assert cache_path(cfg, "1abc").read_text() == PAYLOAD
    assert fetch_entry(cfg, "1abc") == PAYLOAD
    assert len(hits) == 1
    assert parse_pdb(text).chain_ids == ["A", "B", "G", "H"]


def test_cache_hit_needs_no_network(tmp_path):
    cfg = FetchConfig(base_url=f"http://127.0.0.1:{_dead_port()}", cache_dir=tmp_path)
    cache_path(cfg, "3NHC").write_text("cached\n")
    assert fetch_entry(cfg, "3nhc") == "cached\n"


def test_http_error_carries_status(archive, tmp_path):
    url, _ = archive
    with pytest.raises(FetchError) as err:
        fetch_entry(FetchConfig(base_url=url, cache_dir=tmp_path), "9ZZZ")
    assert err.value.status == 404
    assert err.value.entry_id == "9ZZZ"
    assert not any(tmp_path.iterdir())


def test_connection_refused_names_id(tmp_path):
    cfg = FetchConfig(base_url=f"http://127.0.0.1:{_dead_port()}", cache_dir=tmp_path, timeout=2)
    with pytest.raises(FetchError, match="3NHC"):
        fetch_entry(cfg, "3nhc")


@pytest.mark.parametrize("bad", ["XYZ!", "3NH", "3NHCC", "ABCD", "", None])
def test_invalid_ids(bad, tmp_path):
    with pytest.raises(FetchError):
        fetch_entry(FetchConfig(cache_dir=tmp_path), bad)


def test_normalize_and_cache_key(tmp_path):
    cfg = FetchConfig(cache_dir=tmp_path)
    assert normalize_id("3nhc") == "3NHC"
    assert cache_path(cfg, "3nhc") == cache_path(cfg, "3NHC") == tmp_path / "3NHC.pdb"


def test_cached_file_is_not_rewritten(archive, tmp_path):
    url, _ = archive
    cfg = FetchConfig(base_url=url, cache_dir=tmp_path)
    path = cache_path(cfg, "1ABC")
    fetch_entry(cfg, "1ABC")
    inode = path.stat().st_ino
    from stericzipper.fetch import _store

    _store(path, b"something else")
    assert path.read_text() == PAYLOAD
    assert path.stat().st_ino == inode
    assert [p.name for p in tmp_path.iterdir()] == ["1ABC.pdb"]


def test_concurrent_fetch_same_id(archive, tmp_path):
    url, _ = archive
    cfg = FetchConfig(base_url=url, cache_dir=tmp_path)
    results = []
    threads = [threading.Thread(target=lambda: results.append(fetch_entry(cfg, "1abc"))) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [PAYLOAD] * 8
    assert [p.name for p in tmp_path.iterdir()] == ["1ABC.pdb"]


def test_env_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("STERICZIPPER_ARCHIVE_URL", "http://example.invalid/x/")
    monkeypatch.setenv("STERICZIPPER_CACHE_DIR", str(tmp_path))
    cfg = FetchConfig()
    assert cfg.base_url == "http://example.invalid/x"
    assert cfg.cache_dir == tmp_path


@pytest.mark.network
def test_real_entry(tmp_path):
    try:
        text = fetch_entry(FetchConfig(cache_dir=tmp_path, timeout=10), "3NHC")
    except FetchError as exc:
        pytest.skip(f"archive unreachable: {exc}")
    first = parse_pdb(text).chains[0]
    assert first.sequence == "GYMLGS"
