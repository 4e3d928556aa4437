"""
Config fingerprints recorded next to every run
"""
import hashlib
import json

from pydantic import BaseModel


class ConfigFingerprint:
    """SHA-256 over the canonical JSON dump of a config, truncated to `length` hex chars"""

    def __init__(self, length: int = 16):
        self.length = length

    def canonical(self, config: BaseModel) -> str:
        """Key-sorted compact JSON; identical configs give identical text"""
        return json.dumps(
            config.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
        )

    def digest(self, config: BaseModel) -> str:
        data = self.canonical(config).encode("utf-8")
        return hashlib.sha256(data).hexdigest()[: self.length]


# Global instance
fingerprint = ConfigFingerprint()
