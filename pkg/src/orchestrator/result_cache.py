"""
Result Cache

Content-addressed storage for module-level result records:
- one JSON file per key, named by the key
- every file carries a sha256 digest of its record, checked on lookup
- writes go to a temp file in the same directory and are renamed into place
- an unwritable directory disables the cache with a warning
"""

import hashlib
import json
import logging
import os
import tempfile
from typing import Any, Callable, Dict, Optional

logger = logging.getLogger(__name__)


def _builtin(value: Any) -> Any:
    """JSON fallback for numpy scalars and arrays."""
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _digest(record: Any) -> str:
    body = json.dumps(record, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


class ResultCache:
    """Keyed JSON records under a cache directory."""

    def __init__(self, cache_dir: str):
        self.cache_dir = cache_dir
        self.enabled = True
        self.hits = 0
        self.misses = 0
        try:
            os.makedirs(cache_dir, exist_ok=True)
            scratch = tempfile.NamedTemporaryFile(dir=cache_dir, delete=True)
            scratch.close()
        except OSError as e:
            logger.warning(f"Cache directory {cache_dir!r} is not writable ({e}); caching disabled.")
            self.enabled = False

    def _path(self, key: str) -> str:
        return os.path.join(self.cache_dir, f"{key}.json")

    def lookup(self, key: str) -> Optional[Dict[str, Any]]:
        """Return the stored record, or None when missing or corrupted."""
        if not self.enabled:
            return None
        path = self._path(key)
        if not os.path.exists(path):
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                entry = json.load(f)
            record = entry["record"]
            if entry.get("digest") != _digest(record):
                raise ValueError("digest mismatch")
        except (OSError, ValueError, KeyError, TypeError) as e:
            logger.warning(f"Cache entry {key[:12]} is corrupted ({e}); recomputing.")
            return None
        return record

    def store(self, key: str, record: Dict[str, Any]) -> None:
        if not self.enabled:
            return
        entry = {"key": key, "digest": _digest(record), "record": record}
        try:
            fd, tmp_path = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, sort_keys=True)
            os.replace(tmp_path, self._path(key))
        except OSError as e:
            logger.warning(f"Could not write cache entry {key[:12]}: {e}")

    def get_or_compute(self, key: str, compute: Callable[[], Dict[str, Any]]) -> Dict[str, Any]:
        record = self.lookup(key)
        if record is not None:
            self.hits += 1
            logger.info(f"[cache] hit {key[:12]}")
            return record
        self.misses += 1
        record = compute()
        # round-trip so hits and misses return identical values
        record = json.loads(json.dumps(record, default=_builtin))
        self.store(key, record)
        return record
