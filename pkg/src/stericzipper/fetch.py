"""Download structure entries from the public archive, with an on-disk cache.

The cache holds the raw ``<ID>.pdb`` text exactly as downloaded.  New files
are written to a temporary name and hard-linked into place, so a cached
file is never rewritten once it exists, even under concurrent fetches.
"""

from __future__ import annotations

import logging
import os
import re
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import FetchError

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://files.rcsb.org/download"
ENV_BASE_URL = "STERICZIPPER_ARCHIVE_URL"
ENV_CACHE_DIR = "STERICZIPPER_CACHE_DIR"

_ID_RE = re.compile(r"^[0-9][A-Za-z0-9]{3}$")


def _default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "stericzipper"


@dataclass
class FetchConfig:
    base_url: str = field(default_factory=lambda: os.environ.get(ENV_BASE_URL, DEFAULT_BASE_URL))
    cache_dir: Path = field(default_factory=_default_cache_dir)
    timeout: float = 30.0

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)
        self.base_url = self.base_url.rstrip("/")


def normalize_id(entry_id: str) -> str:
    if not isinstance(entry_id, str) or not _ID_RE.match(entry_id):
        raise FetchError(f"invalid entry id {entry_id!r}: expected a digit followed by 3 alphanumerics", entry_id)
    return entry_id.upper()


def cache_path(cfg: FetchConfig, entry_id: str) -> Path:
    return cfg.cache_dir / f"{normalize_id(entry_id)}.pdb"


def _store(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        try:
            os.link(tmp, path)
        except FileExistsError:
            pass  # another fetch won the race; keep its file
        except OSError:
            if not path.exists():
                os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def fetch_entry(cfg: FetchConfig, entry_id: str) -> str:
    """Return the PDB text for ``entry_id``, downloading it on a cache miss."""
    key = normalize_id(entry_id)
    path = cache_path(cfg, key)
    if path.exists():
        logger.debug("cache hit %s", path)
        return path.read_text(encoding="utf-8")

    url = f"{cfg.base_url}/{key}.pdb"
    logger.info("downloading %s", url)
    try:
        with urllib.request.urlopen(url, timeout=cfg.timeout) as resp:
            data = resp.read()
    except urllib.error.HTTPError as exc:
        raise FetchError(f"fetching {key} from {url} failed with HTTP {exc.code}", key, exc.code) from None
    except (urllib.error.URLError, OSError) as exc:
        reason = getattr(exc, "reason", exc)
        raise FetchError(f"could not fetch {key} from {url}: {reason}", key) from None
    _store(path, data)
    return path.read_text(encoding="utf-8")
