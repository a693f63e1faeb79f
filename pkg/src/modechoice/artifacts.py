"""Content-addressed stage artifacts: each pipeline stage stores its output
under a digest of its inputs, so rerunning a stage with unchanged inputs
loads the stored result instead of recomputing."""

from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)


def digest_of(*parts: str | bytes) -> str:
    h = hashlib.sha256()
    for part in parts:
        data = part.encode("utf-8") if isinstance(part, str) else part
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)
    return h.hexdigest()


def stage_path(out_dir: str | Path, stage: str, key: str, suffix: str = ".jsonl") -> Path:
    directory = Path(out_dir) / "stages"
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{stage}-{key[:16]}{suffix}"


def write_text_atomic(path: Path, text: str) -> bool:
    """Atomically write text unless identical content is already in place."""
    if path.exists() and path.read_text(encoding="utf-8") == text:
        return False
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return True


def load_or_create(path: Path, compute, serialize, deserialize):
    """Return the artifact at `path`, deserializing when it exists and
    computing + storing it otherwise."""
    if path.exists():
        logger.info("reusing stage artifact %s", path)
        return deserialize(path.read_text(encoding="utf-8"))
    value = compute()
    write_text_atomic(path, serialize(value))
    return value
