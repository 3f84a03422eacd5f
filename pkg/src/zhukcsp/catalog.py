"""Built-in algebras used as fixtures and fuzz targets."""

from __future__ import annotations

from .algebra import FiniteAlgebra, make_algebra
from .errors import InputError


def _f3(x, y, z):
    if x < 2 and y < 2 and z < 2:
        return (x + y + z) % 2
    if x == y == z == 2:
        return 2
    return next(v for v in (x, y, z) if v != 2)


def _f5(a, b, c, d, e):
    return _f3(_f3(a, b, c), d, e)


def _dd3(x, y, z):
    return x if y != z else y


def _z2xz2(x, y, z):
    # element e encodes the pair (e >> 1, e & 1)
    return x ^ y ^ z


_BUILDERS = {
    "Z2": lambda: make_algebra(2, 3, lambda x, y, z: (x + y + z) % 2, "Z2"),
    "MAJ": lambda: make_algebra(2, 3, lambda x, y, z: int(x + y + z >= 2), "MAJ"),
    "AND3": lambda: make_algebra(2, 3, lambda x, y, z: x & y & z, "AND3"),
    "MIN3": lambda: make_algebra(2, 3, lambda x, y, z: (x + y + z) % 2, "MIN3"),
    "DD3": lambda: make_algebra(3, 3, _dd3, "DD3"),
    "F3": lambda: make_algebra(3, 3, _f3, "F3"),
    "F5": lambda: make_algebra(3, 5, _f5, "F5"),
    "Z3": lambda: make_algebra(3, 7, lambda *xs: sum(xs) % 3, "Z3"),
    "Z4w5": lambda: make_algebra(4, 5, lambda *xs: sum(xs) % 4, "Z4w5"),
    "Z2xZ2": lambda: make_algebra(4, 3, _z2xz2, "Z2xZ2"),
}

NAMES = tuple(_BUILDERS)
_CACHE: dict[str, FiniteAlgebra] = {}


def catalog(name: str) -> FiniteAlgebra:
    if name not in _BUILDERS:
        raise InputError(f"unknown catalog algebra {name!r}; known: {', '.join(NAMES)}")
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]
