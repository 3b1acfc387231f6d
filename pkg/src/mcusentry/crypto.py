"""Keyed primitives: HMAC-SHA256, labeled key derivation, and the demo
one-time-pad stream.

Key derivation is domain separated: the ``auth`` label yields the token
key, ``enc`` the one-time output-encryption key, so a token can never be
confused for key material. The pad keystream is built from counter-indexed
HMAC blocks; the scheme is deliberately pluggable behind the
encrypt/decrypt pair.
"""
from __future__ import annotations

import hmac
import hashlib

from .errors import SizeError

KEY_BYTES = 32
MAC_BYTES = 32
CHAL_BYTES = 8
_OTP_MAX_BLOCKS = 256

LABEL_AUTH = b"auth"
LABEL_ENC = b"enc"


def hmac_sha256(key: bytes, message: bytes) -> bytes:
    return hmac.new(key, message, hashlib.sha256).digest()


def kdf(key: bytes, chal: int, label: bytes) -> bytes:
    """One-time key for a challenge: HMAC over label || big-endian counter."""
    if len(key) != KEY_BYTES:
        raise ValueError(f"master key must be {KEY_BYTES} bytes")
    if not 0 <= chal < 1 << 64:
        raise ValueError("challenge must fit 64 bits")
    return hmac_sha256(key, label + chal.to_bytes(CHAL_BYTES, "big"))


def token_mac(key: bytes, chal: int, binary: bytes) -> bytes:
    """Authorization token: MAC of the binary under the derived token key."""
    return hmac_sha256(kdf(key, chal, LABEL_AUTH), binary)


def derive_enc_key(key: bytes, chal: int) -> bytes:
    return kdf(key, chal, LABEL_ENC)


def otp_keystream(k_enc: bytes, length: int) -> bytes:
    if length > _OTP_MAX_BLOCKS * MAC_BYTES:
        raise SizeError(f"payload of {length} bytes exceeds the pad limit")
    out = bytearray()
    block = 0
    while len(out) < length:
        out += hmac_sha256(k_enc, block.to_bytes(8, "big"))
        block += 1
    return bytes(out[:length])


def encrypt_output(k_enc: bytes, payload: bytes) -> bytes:
    """XOR the payload against the expanded pad. Empty payload is legal."""
    stream = otp_keystream(k_enc, len(payload))
    return bytes(a ^ b for a, b in zip(payload, stream))


def decrypt_output(k_enc: bytes, ciphertext: bytes) -> bytes:
    return encrypt_output(k_enc, ciphertext)


def format_ciphertext(chal: int, ciphertext: bytes) -> bytes:
    """Wire form of an encrypted result: challenge, then ciphertext."""
    return chal.to_bytes(CHAL_BYTES, "big") + ciphertext


def parse_ciphertext(blob: bytes) -> tuple[int, bytes]:
    if len(blob) < CHAL_BYTES:
        raise SizeError("ciphertext blob shorter than its challenge header")
    return int.from_bytes(blob[:CHAL_BYTES], "big"), blob[CHAL_BYTES:]


def decrypt_ctrl(key: bytes, blob: bytes) -> bytes:
    """Controller-side decryption of a formatted result."""
    chal, ciphertext = parse_ciphertext(blob)
    return decrypt_output(derive_enc_key(key, chal), ciphertext)
