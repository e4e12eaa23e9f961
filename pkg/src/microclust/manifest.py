"""Run manifests: enough provenance to reproduce any output bit-exactly."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

__all__ = ["RunManifest"]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    version: str = __version__
    started_at: str = field(default_factory=_utc_now)
    finished_at: str = ""
    outputs: list[str] = field(default_factory=list)

    def add_output(self, path: str | Path) -> None:
        self.outputs.append(str(path))

    def finish(self) -> None:
        self.finished_at = _utc_now()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
