import pytest

from datashare.utils.crypto import AESCipher


@pytest.fixture
def secret_key():
    return b"\x01" * 16


@pytest.fixture
def aes_cipher(secret_key):
    return AESCipher(secret_key)


def test_encrypt_decrypt(aes_cipher):
    original = b"test-message"
    encrypted = aes_cipher.encrypt(original)
    assert encrypted != original
    assert aes_cipher.decrypt(encrypted) == original


def test_fixed_iv_is_deterministic(aes_cipher):
    iv = bytes(range(16))
    assert aes_cipher.encrypt(b"payload", iv) == aes_cipher.encrypt(b"payload", iv)


def test_rejects_short_iv(aes_cipher):
    with pytest.raises(ValueError):
        aes_cipher.encrypt(b"payload", b"short")


def test_decrypt_invalid_data(aes_cipher):
    assert aes_cipher.decrypt(b"invalid-data") is None


def test_wrong_key_does_not_decrypt(aes_cipher):
    encrypted = aes_cipher.encrypt(b"x" * 40, bytes(16))
    assert AESCipher(b"\x02" * 16).decrypt(encrypted) != b"x" * 40
