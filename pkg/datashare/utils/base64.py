import base64 as _base64
import binascii

from datashare.errors import InvalidInputError


class Base64:
    @staticmethod
    def encode(data: str | bytes) -> str:
        return _base64.b64encode(
            data.encode() if isinstance(data, str) else data
        ).decode()

    @staticmethod
    def decode(data: str, text: bool | None = True) -> str | bytes:
        try:
            output = _base64.b64decode(data.encode(), validate=True)
            return output.decode() if text else output
        except (binascii.Error, UnicodeDecodeError) as e:
            raise InvalidInputError("Invalid base64 encoding") from e

    @staticmethod
    def decode_bytes(data: str) -> bytes:
        decoded_data = Base64.decode(data, text=False)
        if isinstance(decoded_data, str):
            return decoded_data.encode()
        return decoded_data

    @staticmethod
    def encode_int(value: int) -> str:
        """Big-endian, minimal length; zero encodes as a single zero byte."""
        length = max(1, (value.bit_length() + 7) // 8)
        return Base64.encode(value.to_bytes(length, "big"))

    @staticmethod
    def decode_int(data: str) -> int:
        return int.from_bytes(Base64.decode_bytes(data), "big")
