from .container import (BadMagicError, ChecksumError, CodecContainer, HeaderError,
                        MissingInitializationError, UnsupportedVersionError, pack_config,
                        parse_container, serialize_container, unpack_config)
from .rangecoder import (BinaryDecoder, BinaryEncoder, CodecError, TruncatedStreamError,
                         decode_bits, decode_codes, encode_bits, encode_codes)

__all__ = [
    "BadMagicError", "BinaryDecoder", "BinaryEncoder", "ChecksumError", "CodecContainer",
    "CodecError", "HeaderError", "MissingInitializationError", "TruncatedStreamError",
    "UnsupportedVersionError", "decode_bits", "decode_codes", "encode_bits", "encode_codes",
    "pack_config", "parse_container", "serialize_container", "unpack_config",
]
