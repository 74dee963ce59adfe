from hashlib import sha256

from Crypto import Random
from Crypto.Cipher import AES
from Crypto.Util.Padding import pad, unpad


class AESCipher:
    """AES-256-CBC keyed by sha256(key); ciphertexts carry their IV as a prefix."""

    def __init__(self, key: bytes):
        self.bs = AES.block_size
        self.key = sha256(key).digest()

    def encrypt(self, raw: bytes, iv: bytes | None = None) -> bytes:
        encoded_raw = pad(raw, AES.block_size)
        if iv is None:
            iv = Random.new().read(AES.block_size)
        if len(iv) != AES.block_size:
            raise ValueError(f"IV must be {AES.block_size} bytes")
        cipher = AES.new(self.key, AES.MODE_CBC, iv)
        return iv + cipher.encrypt(encoded_raw)

    def decrypt(self, enc: bytes) -> bytes | None:
        try:
            iv = enc[: AES.block_size]
            cipher = AES.new(
                self.key,
                AES.MODE_CBC,
                iv,
            )
            return unpad(cipher.decrypt(enc[AES.block_size :]), AES.block_size)
        except ValueError:
            return None
