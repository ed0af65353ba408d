# PEP-8
"""Little-endian binary fields for checkpoints.

Every ``unpack_*`` returns ``(value, rest_of_buffer)`` so readers can chain calls.
"""
import struct

import numpy as np

F64 = np.dtype('<f8')


def _pack(fmt: str, x) -> bytes:
    return struct.pack('<' + fmt, int(x))


def _unpack(fmt: str, buffer: bytes):
    size = struct.calcsize('<' + fmt)
    if len(buffer) < size:
        raise struct.error(f'need {size} bytes for {fmt!r}, {len(buffer)} left')
    return struct.unpack('<' + fmt, buffer[:size])[0], buffer[size:]


def pack_uint16(x) -> bytes:
    return _pack('H', x)


def unpack_uint16(buffer: bytes):
    return _unpack('H', buffer)


def pack_uint32(x) -> bytes:
    return _pack('I', x)


def unpack_uint32(buffer: bytes):
    return _unpack('I', buffer)


def pack_blob(blob: bytes) -> bytes:
    return pack_uint32(len(blob)) + blob


def unpack_blob(buffer: bytes):
    length, buffer = unpack_uint32(buffer)
    if len(buffer) < length:
        raise struct.error('blob runs past end of buffer')
    return buffer[:length], buffer[length:]


def pack_array(name: str, array: np.ndarray) -> bytes:
    """Name, rank, dims, then C-order float64 data."""
    array = np.asarray(array, dtype=F64)
    return (
        _pack('H', len(name.encode('utf-8'))) + name.encode('utf-8')
        + _pack('B', array.ndim)
        + b''.join(pack_uint32(n) for n in array.shape)
        + array.tobytes(order='C')
    )


def unpack_array(buffer: bytes):
    length, buffer = _unpack('H', buffer)
    if len(buffer) < length:
        raise struct.error('tensor name runs past end of buffer')
    name, buffer = buffer[:length].decode('utf-8'), buffer[length:]
    ndim, buffer = _unpack('B', buffer)
    shape = []
    for _ in range(ndim):
        n, buffer = unpack_uint32(buffer)
        shape.append(n)
    size = int(np.prod(shape, dtype=np.int64)) * F64.itemsize
    if len(buffer) < size:
        raise struct.error(f'tensor {name!r} runs past end of buffer')
    array = np.frombuffer(buffer[:size], dtype=F64).reshape(shape).astype(np.float64)
    return name, array, buffer[size:]
