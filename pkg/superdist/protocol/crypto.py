"""Pluggable digest and signature primitives.

``Ed25519Suite`` is the real implementation. ``HashSuite`` is a deterministic
stand-in for fast tests: its "signatures" are keyed hashes that anyone
holding the public key can recompute, so it only detects accidental or
adversarial modification of signed bytes, never forgery.
"""

from __future__ import annotations

import hashlib
import hmac
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from superdist.core.licences import content_digest


@dataclass(frozen=True)
class KeyPair:
    private: bytes
    public: bytes

    def fingerprint(self) -> str:
        return hashlib.sha256(self.public).hexdigest()[:16]


def _seed_bytes(rng: Optional[np.random.Generator]) -> bytes:
    return rng.bytes(32) if rng is not None else os.urandom(32)


class CryptoSuite(ABC):
    name: str = "abstract"

    def digest(self, data: bytes) -> bytes:
        return content_digest(data)

    @abstractmethod
    def keygen(self, rng: Optional[np.random.Generator] = None) -> KeyPair:
        """New key pair; deterministic when ``rng`` is given."""

    @abstractmethod
    def sign(self, private: bytes, message: bytes) -> bytes: ...

    @abstractmethod
    def verify_sig(self, public: bytes, message: bytes, signature: bytes) -> bool: ...


class Ed25519Suite(CryptoSuite):
    name = "ed25519"

    def keygen(self, rng: Optional[np.random.Generator] = None) -> KeyPair:
        key = Ed25519PrivateKey.from_private_bytes(_seed_bytes(rng))
        public = key.public_key().public_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PublicFormat.Raw,
        )
        private = key.private_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PrivateFormat.Raw,
            encryption_algorithm=serialization.NoEncryption(),
        )
        return KeyPair(private=private, public=public)

    def sign(self, private: bytes, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(private).sign(message)

    def verify_sig(self, public: bytes, message: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


class HashSuite(CryptoSuite):
    name = "hash-test-double"

    @staticmethod
    def _public(private: bytes) -> bytes:
        return hashlib.sha256(b"public:" + private).digest()

    def keygen(self, rng: Optional[np.random.Generator] = None) -> KeyPair:
        private = _seed_bytes(rng)
        return KeyPair(private=private, public=self._public(private))

    def sign(self, private: bytes, message: bytes) -> bytes:
        return hashlib.sha256(self._public(private) + message).digest()

    def verify_sig(self, public: bytes, message: bytes, signature: bytes) -> bool:
        return hmac.compare_digest(hashlib.sha256(public + message).digest(), signature)


SUITES = {
    Ed25519Suite.name: Ed25519Suite,
    HashSuite.name: HashSuite,
}
