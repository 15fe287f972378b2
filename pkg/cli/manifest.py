"""
Run manifest: what produced an output directory. Written after every other
artifact so its digests cover the final file contents.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

from cli import TOOL_NAME, __version__
from cli.output import write_json
from core.rng import RNG_ALGORITHM

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
DIGEST_CHUNK = 1 << 16


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(DIGEST_CHUNK), b''):
            h.update(chunk)
    return f"sha256:{h.hexdigest()}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


@dataclass
class RunManifest:
    experiment: str
    config: Dict[str, Any]
    seed: int
    jobs: int = 1
    tool: str = TOOL_NAME
    version: str = __version__
    rng: str = RNG_ALGORITHM
    started_at: str = field(default_factory=_now)
    finished_at: str = ''
    files: Dict[str, str] = field(default_factory=dict)   # file name -> sha256 digest

    def add_file(self, path: Path) -> None:
        self.files[Path(path).name] = file_digest(path)

    def finish(self, out_dir: Path) -> Path:
        self.finished_at = _now()
        path = write_json(Path(out_dir) / MANIFEST_NAME, asdict(self))
        logger.info("manifest written to %s (%d files)", path, len(self.files))
        return path

    def verify(self, out_dir: Path) -> List[str]:
        """Names of listed files whose current digest differs (or that are gone)."""
        bad = []
        for name, digest in self.files.items():
            path = Path(out_dir) / name
            if not path.exists() or file_digest(path) != digest:
                bad.append(name)
        return bad

    @classmethod
    def load(cls, path: Path) -> 'RunManifest':
        with open(path) as fh:
            return cls(**json.load(fh))
