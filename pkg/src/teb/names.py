"""Hierarchical names.

A name is an ordered tuple of non-empty byte-string components. The text form
is ``/`` followed by the components joined with ``/``; inside a component
``%2F`` stands for ``/`` and ``%25`` for ``%``. Bytes that are not printable
ASCII are written as ``%XX`` so that any component survives a round trip.
"""

from __future__ import annotations

from functools import total_ordering
from typing import Iterable, Union
from urllib.parse import quote, unquote_to_bytes

from .errors import MalformedName

# every printable ASCII character except the separator and the escape char
_SAFE = "".join(chr(c) for c in range(0x21, 0x7F) if chr(c) not in "/%")

Component = Union[bytes, str]


def _as_component(c) -> bytes:
    if isinstance(c, str):
        c = c.encode("utf-8")
    elif isinstance(c, (bytearray, memoryview)):
        c = bytes(c)
    elif not isinstance(c, bytes):
        raise TypeError(f"name component must be bytes or str, not {type(c).__name__}")
    if not c:
        raise MalformedName("empty name component")
    return c


def format_component(c: bytes) -> str:
    return quote(c, safe=_SAFE)


@total_ordering
class Name:
    """Immutable hierarchical name.

    >>> Name("/ndnfit/alice") + "KEY"
    Name('/ndnfit/alice/KEY')
    """

    __slots__ = ("_components",)

    def __init__(self, value: "str | Name | Iterable[Component]" = ()):
        if isinstance(value, Name):
            comps = value._components
        elif isinstance(value, str):
            comps = name_parse(value)._components
        else:
            comps = tuple(_as_component(c) for c in value)
        object.__setattr__(self, "_components", comps)

    def __setattr__(self, key, value):
        raise AttributeError("Name is immutable")

    @classmethod
    def _raw(cls, comps: tuple) -> "Name":
        n = object.__new__(cls)
        object.__setattr__(n, "_components", comps)
        return n

    @property
    def components(self) -> tuple:
        return self._components

    def __len__(self):
        return len(self._components)

    def __iter__(self):
        return iter(self._components)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Name._raw(self._components[idx])
        return self._components[idx]

    def __add__(self, other) -> "Name":
        if isinstance(other, Name):
            return Name._raw(self._components + other._components)
        if isinstance(other, (bytes, str)):
            return Name._raw(self._components + (_as_component(other),))
        return Name._raw(self._components + tuple(_as_component(c) for c in other))

    def append(self, *components: Component) -> "Name":
        return self + components

    def __eq__(self, other):
        if isinstance(other, Name):
            return self._components == other._components
        return NotImplemented

    def __lt__(self, other):
        if not isinstance(other, Name):
            return NotImplemented
        return self._components < other._components

    def __hash__(self):
        return hash(self._components)

    def __str__(self):
        return name_format(self)

    def __repr__(self):
        return f"Name({name_format(self)!r})"

    def is_prefix_of(self, other: "Name") -> bool:
        return is_prefix_of(self, other)

    def text(self, idx: int) -> str:
        """Component ``idx`` decoded as UTF-8 (for display and comparisons)."""
        return self._components[idx].decode("utf-8", errors="replace")


def name_parse(text: str) -> Name:
    if not isinstance(text, str):
        raise TypeError("name text must be str")
    if not text.startswith("/"):
        raise MalformedName(f"name must start with '/': {text!r}")
    if text == "/":
        return Name._raw(())
    comps = []
    for part in text[1:].split("/"):
        if not part:
            raise MalformedName(f"empty component in {text!r}")
        comps.append(unquote_to_bytes(part))
    return Name._raw(tuple(comps))


def name_format(n: Name) -> str:
    if not n.components:
        return "/"
    return "/" + "/".join(format_component(c) for c in n.components)


def is_prefix_of(a: Name, b: Name) -> bool:
    ca, cb = a.components, b.components
    return len(ca) <= len(cb) and cb[: len(ca)] == ca
