"""Counter-based random streams for reproducible Monte Carlo.

Each replication draws from its own Philox-4x64 stream keyed by
(seed, stream_id). Outputs are addressed by a 64-bit output counter, so a
replication can be regenerated without replaying the ones before it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ParameterError

logger = logging.getLogger(__name__)

UINT64_LIMIT = 1 << 64
_WORDS_PER_BLOCK = 4
_UNIT_53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


def _check_word(name: str, value: int) -> int:
    value = int(value)
    if not 0 <= value < UINT64_LIMIT:
        raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {value}")
    return value


def parse_seed(text: Union[str, int]) -> int:
    """Seed from decimal or 0x-prefixed hexadecimal text."""
    if isinstance(text, int):
        return _check_word("seed", text)
    try:
        value = int(text.strip(), 0) if text.strip().lower().startswith("0x") else int(text.strip(), 10)
    except ValueError:
        raise ParameterError(f"seed must be decimal or 0x-hex, got {text!r}")
    return _check_word("seed", value)


@dataclass(frozen=True)
class StreamKey:
    """Address of one random stream and a position in it."""
    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        _check_word("seed", self.seed)
        _check_word("stream_id", self.stream_id)
        _check_word("counter", self.counter)

    @property
    def philox_key(self) -> int:
        return self.seed | (self.stream_id << 64)


class RandomStream:
    """Sequential reader over a Philox stream.

    position counts 64-bit outputs consumed; uniforms use one output each,
    Gaussians two and Rademacher signs one per 64 steps.
    """

    def __init__(self, key: StreamKey):
        self.key = key
        block, offset = divmod(key.counter, _WORDS_PER_BLOCK)
        # numpy steps the block counter before each block, so counter=block
        # yields block index `block` of the stream started at counter 0.
        self._bit_generator = np.random.Philox(key=key.philox_key, counter=block)
        self._position = key.counter - offset
        if offset:
            self.raw(offset)

    @classmethod
    def at(cls, seed: int, stream_id: int = 0, counter: int = 0) -> "RandomStream":
        return cls(StreamKey(seed, stream_id, counter))

    @property
    def position(self) -> int:
        return self._position

    def raw(self, size: int) -> np.ndarray:
        """Next size raw 64-bit outputs."""
        if size < 0:
            raise ParameterError(f"size must be non-negative, got {size}")
        self._position += size
        return np.asarray(self._bit_generator.random_raw(size), dtype=np.uint64)

    def uniform01(self, size: Optional[int] = None) -> Union[float, np.ndarray]:
        """Uniforms on [0, 1) from the top 53 bits of each output."""
        count = 1 if size is None else size
        values = (self.raw(count) >> np.uint64(11)).astype(np.float64) * _UNIT_53
        return float(values[0]) if size is None else values

    def gaussian(self, size: Optional[int] = None) -> Union[float, np.ndarray]:
        """Standard normals by Box-Muller on consecutive uniform pairs, cosine branch only."""
        count = 1 if size is None else size
        uniforms = self.uniform01(2 * count)
        radius = np.sqrt(-2.0 * np.log1p(-uniforms[0::2]))
        values = radius * np.cos(_TWO_PI * uniforms[1::2])
        return float(values[0]) if size is None else values

    def rademacher(self, size: int) -> np.ndarray:
        """size fair +-1 steps; step 64 w + i is bit i (least significant first) of output w."""
        words = self.raw(-(-size // 64)).astype("<u8", copy=False)
        bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:size]
        return 1.0 - 2.0 * bits.astype(np.float64)


def uniform01(stream: RandomStream) -> float:
    return stream.uniform01()


def gaussian(stream: RandomStream) -> float:
    return stream.gaussian()
