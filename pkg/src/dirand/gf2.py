"""Bit strings, GF(2) linear algebra and binary extension fields.

Bit strings are numpy ``uint8`` arrays of zeros and ones. Conversion to an
integer is big-endian: the first bit is the most significant. A field
element of GF(2^n) is an integer whose bit ``j`` is the coefficient of
``x**j``; the bit string of an element is its big-endian encoding.
"""

from __future__ import annotations

import functools
from typing import Sequence

import numpy as np

# Irreducible polynomial of each degree, lowest weight first (bit j <-> x**j).
IRREDUCIBLE = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
}


def as_bits(bits: Sequence[int] | str | np.ndarray) -> np.ndarray:
    """Coerce a sequence of 0/1 values or a string like ``"0110"`` to uint8."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit strings may contain only 0 and 1")
    return arr.astype(np.uint8).reshape(-1)


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def bits_to_int(bits: Sequence[int]) -> int:
    v = 0
    for b in as_bits(bits):
        v = (v << 1) | int(b)
    return v


def int_to_bits(v: int, n: int) -> np.ndarray:
    if v < 0 or v >> n:
        raise ValueError(f"{v} does not fit in {n} bits")
    return np.array([(v >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)


def all_strings(n: int) -> np.ndarray:
    """Array of shape (2**n, n) whose row ``v`` is the bit string of ``v``."""
    v = np.arange(2**n)
    return ((v[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1).astype(np.uint8)


def gf2_rank(M: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix."""
    rows = [bits_to_int(r) for r in np.asarray(M, dtype=np.uint8) % 2]
    rank = 0
    while rows:
        pivot = max(rows)
        rows.remove(pivot)
        if pivot == 0:
            break
        rank += 1
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows]
    return rank


def gf2_matvec(M: np.ndarray, x: Sequence[int]) -> np.ndarray:
    return (np.asarray(M, dtype=np.int64) @ as_bits(x).astype(np.int64) % 2).astype(np.uint8)


# Polynomials over GF(2) as integers ----------------------------------------------


def _clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    if a.bit_count() < b.bit_count():
        a, b = b, a
    out = 0
    while b:
        low = b & -b
        out ^= a << (low.bit_length() - 1)
        b ^= low
    return out


def _poly_mod(a: int, m: int) -> int:
    """Remainder of ``a`` modulo ``m``, folding the high part onto the low terms."""
    dm = m.bit_length() - 1
    if dm == 0:
        return 0
    low = m ^ (1 << dm)
    mask = (1 << dm) - 1
    while a >> dm:
        a = (a & mask) ^ _clmul(a >> dm, low)
    return a


def poly_mulmod(a: int, b: int, mod: int) -> int:
    return _poly_mod(_clmul(a, b), mod)


def _poly_square(a: int) -> int:
    # Squaring over GF(2) spreads the bits: sum a_i x^i -> sum a_i x^(2i).
    return int("0".join(bin(a)[2:]), 2) if a else 0


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def _x_power_mod(e: int, mod: int) -> int:
    """x**(2**e) modulo ``mod``."""
    r = _poly_mod(0b10, mod)
    for _ in range(e):
        r = _poly_mod(_poly_square(r), mod)
    return r


def is_irreducible(p: int) -> bool:
    """Rabin's test for a polynomial of degree n over GF(2)."""
    n = p.bit_length() - 1
    if n < 1:
        return False
    x = _poly_mod(0b10, p)
    if _x_power_mod(n, p) != x:
        return False
    primes = {d for d in range(2, n + 1) if n % d == 0 and all(d % q for q in range(2, d))}
    for q in primes:
        h = _x_power_mod(n // q, p) ^ x
        if _poly_gcd(p, h) != 1:
            return False
    return True


@functools.lru_cache(maxsize=None)
def irreducible_poly(n: int) -> int:
    """A fixed irreducible polynomial of degree ``n``.

    Degrees up to 8 use the table; beyond that the lexicographically first
    trinomial, then pentanomial, that passes the irreducibility test.
    """
    if n < 1:
        raise ValueError("degree must be positive")
    if n in IRREDUCIBLE:
        return IRREDUCIBLE[n]
    top = (1 << n) | 1
    for a in range(1, n):
        if is_irreducible(top | (1 << a)):
            return top | (1 << a)
    for a in range(1, n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                p = top | (1 << a) | (1 << b) | (1 << c)
                if is_irreducible(p):
                    return p
    raise ArithmeticError(f"no irreducible polynomial of degree {n} found")  # pragma: no cover


def field_mul(a: int, b: int, n: int) -> int:
    return poly_mulmod(a, b, irreducible_poly(n))


def multiplication_matrix(a: int, n: int) -> np.ndarray:
    """Matrix of ``v -> a * v`` on big-endian bit strings of GF(2^n) elements."""
    mod = irreducible_poly(n)
    M = np.zeros((n, n), dtype=np.uint8)
    # Column j is the image of x**(n-1-j); walk up from x**0 = 1.
    v = _poly_mod(a, mod)
    for j in range(n - 1, -1, -1):
        M[:, j] = int_to_bits(v, n)
        v = _poly_mod(v << 1, mod)
    return M
