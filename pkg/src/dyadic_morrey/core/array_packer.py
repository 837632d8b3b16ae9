import base64
import struct

from dyadic_morrey.errors import ParseError

#/********************************************************************************
# * Little-endian IEEE-754 float64 packing for function and coefficient payloads.
# * The payload travels as base64 text inside a JSON document.
# ********************************************************************************/

DOUBLE_SIZE = struct.calcsize('<d')


def convert_to_packed_bytes(array, format_specifier):
    packed_bytes = struct.pack('<{}{}'.format(len(array), format_specifier), *array)
    return packed_bytes


def convert_to_packed_double_array(array):
    return convert_to_packed_bytes([float(x) for x in array], 'd')


def convert_from_packed_bytes(packed_bytes, format_specifier, length):
    return struct.unpack('<{}{}'.format(length, format_specifier), packed_bytes)


def convert_from_packed_double_array(packed_bytes):
    if len(packed_bytes) % DOUBLE_SIZE:
        # offset of the first byte that does not complete a double
        raise ParseError("payload is not a whole number of float64 values",
                         offset=len(packed_bytes) - len(packed_bytes) % DOUBLE_SIZE)
    return convert_from_packed_bytes(packed_bytes, 'd', len(packed_bytes) // DOUBLE_SIZE)


def encode_doubles(array) -> str:
    return base64.b64encode(convert_to_packed_double_array(array)).decode('ascii')


def decode_doubles(text: str, expected: int = None):
    try:
        packed_bytes = base64.b64decode(text.encode('ascii'), validate=True)
    except (ValueError, UnicodeEncodeError) as e:
        raise ParseError(f"payload is not valid base64: {e}") from e
    values = convert_from_packed_double_array(packed_bytes)
    if expected is not None and len(values) != expected:
        raise ParseError(f"payload holds {len(values)} values, header announces {expected}",
                         offset=min(len(values), expected) * DOUBLE_SIZE)
    return values
