"""Atomic, deterministic artifact files (CSV / JSON).

Every output file is written to a temporary sibling and renamed into
place, so an interrupted run never leaves a truncated artifact.  JSON is
serialized with sorted keys and repr floats, which makes reruns under the
same seed byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def atomic_write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
