"""Local directory of meta-learned initializations, looked up by content hash.

The directory is ``$INRC_INIT_DIR`` or ``~/.cache/inrc/inits``. Files are
named ``<hash hex>.inri``.
"""

from __future__ import annotations

import os
from pathlib import Path

from .bitstream import MissingInitializationError
from .meta import MetaInit

ENV_VAR = "INRC_INIT_DIR"


def registry_dir(path=None) -> Path:
    if path is not None:
        return Path(path)
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else Path.home() / ".cache" / "inrc" / "inits"


class InitRegistry:
    def __init__(self, path=None):
        self.path = registry_dir(path)

    def _file(self, h: bytes) -> Path:
        return self.path / f"{h.hex()}.inri"

    def __contains__(self, h) -> bool:
        return self._file(bytes(h)).is_file()

    def add(self, minit: MetaInit) -> Path:
        self.path.mkdir(parents=True, exist_ok=True)
        return minit.save(self._file(minit.content_hash))

    def get(self, h: bytes) -> MetaInit:
        f = self._file(bytes(h))
        if not f.is_file():
            raise MissingInitializationError(
                f"initialization {bytes(h).hex()} not found in {self.path} (set {ENV_VAR})")
        return MetaInit.load(f)
