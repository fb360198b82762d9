"""Bit strings over {0,1}: concatenation, substring/prefix relations, enumeration.

Bit strings are plain ``str`` values made of the characters ``'0'`` and ``'1'``;
the empty string is the empty bit string.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Iterator

BitString = str

_N_BLOCKS = {"0": "010", "1": "0110"}


def check_bits(b: str) -> BitString:
    if not isinstance(b, str) or any(c not in "01" for c in b):
        raise ValueError(f"not a bit string: {b!r}")
    return b


def concat(a: BitString, b: BitString) -> BitString:
    return a + b


def is_substring(u: BitString, v: BitString) -> bool:
    return u in v


def is_prefix(u: BitString, v: BitString) -> bool:
    return v.startswith(u)


def _order(s: BitString) -> tuple[int, str]:
    return (len(s), s)


@lru_cache(maxsize=4096)
def substrings(v: BitString) -> tuple[BitString, ...]:
    """All distinct substrings of `v`, shortest first, then lexicographic."""
    found = {v[i:j] for i in range(len(v) + 1) for j in range(i, len(v) + 1)}
    return tuple(sorted(found, key=_order))


@lru_cache(maxsize=4096)
def prefixes(v: BitString) -> tuple[BitString, ...]:
    return tuple(v[:i] for i in range(len(v) + 1))


def all_strings(max_len: int) -> Iterator[BitString]:
    """Every bit string of length <= max_len in (length, lexicographic) order."""
    for n in range(max_len + 1):
        for bits in product("01", repeat=n):
            yield "".join(bits)


def n_encode(b: BitString) -> BitString:
    """The block code 0 -> 010, 1 -> 0110 used by the PCP reductions."""
    return "".join(_N_BLOCKS[c] for c in b)
