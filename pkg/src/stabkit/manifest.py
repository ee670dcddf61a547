"""Run manifests: every artifact embeds the command, a stable digest of
its configuration, the seed, and the software version.

Wall-clock timing is reported on the side (stderr / response headers),
never inside artifact bytes, so that re-running a manifest reproduces
the artifact byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from . import __version__

__all__ = ["RunManifest", "canonical_json", "config_digest"]


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, minimal separators, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(config) -> str:
    """SHA-256 of the canonical JSON form; stable across platforms."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_digest: str
    seed: int
    version: str = __version__

    @classmethod
    def for_request(cls, command: str, config, seed: int) -> "RunManifest":
        return cls(command=command, config_digest=config_digest(config), seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "version": self.version,
        }
