"""Deterministic in-memory network with one forwarder and out-of-band channels.

Entities are identified by strings and answer Interests through a handler
``handler(interest, from_id) -> Data | None``. Handlers may express Interests
themselves; everything runs synchronously on a logical step clock, so a run
is fully determined by the scenario and its seed.
"""

from __future__ import annotations

import enum
import json
import random
from collections import Counter, OrderedDict, deque
from dataclasses import asdict, dataclass
from typing import Callable, Optional

from .errors import EmptyMailbox, NoRoute, ProximityViolation
from .names import Name
from .packets import Data, Interest, encode, is_certificate_name

DEFAULT_CS_CAPACITY = 64
INTEREST_TIMEOUT = 16

Handler = Callable[[Interest, str], Optional[Data]]


class OobKind(enum.Enum):
    QR = "QR"
    EMAIL = "EMAIL"
    VIBRATION = "VIBRATION"
    CONSOLE = "CONSOLE"


@dataclass
class TranscriptEvent:
    step: int
    channel: str
    event: str
    src: str
    dst: str
    summary: str
    size: int


class Transcript:
    def __init__(self):
        self.events: list = []

    def append(self, event: TranscriptEvent):
        self.events.append(event)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(e), separators=(",", ":")) + "\n" for e in self.events)

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_jsonl())

    def select(self, event=None, src=None, dst=None, channel=None) -> list:
        return [e for e in self.events
                if (event is None or e.event == event) and (src is None or e.src == src)
                and (dst is None or e.dst == dst) and (channel is None or e.channel == channel)]

    def expressed(self, src: str, predicate: Callable[[Name], bool] = lambda n: True) -> int:
        """Interests ``src`` sent to the forwarder whose name satisfies ``predicate``."""
        return sum(1 for e in self.select(event="interest", src=src) if predicate(Name(e.summary)))

    def certificate_fetches(self, src: str) -> int:
        # wrapped-key names end in the recipient's certificate name; they are not certificates
        return self.expressed(src, lambda n: is_certificate_name(n) and b"ENCRYPTED-BY" not in n.components)

    def mark(self) -> int:
        return len(self.events)

    def since(self, mark: int) -> "Transcript":
        t = Transcript()
        t.events = self.events[mark:]
        return t


class ContentStore:
    """Exact-name cache with FIFO eviction."""

    def __init__(self, capacity: int = DEFAULT_CS_CAPACITY):
        self.capacity = capacity
        self._entries = OrderedDict()

    def get(self, name: Name) -> Optional[Data]:
        return self._entries.get(name)

    def put(self, data: Data):
        if self.capacity <= 0:
            return
        if data.name in self._entries:
            self._entries[data.name] = data
            return
        while len(self._entries) >= self.capacity:
            self._entries.popitem(last=False)
        self._entries[data.name] = data

    def evict(self, name: Name):
        self._entries.pop(name, None)

    def clear(self):
        self._entries.clear()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return name in self._entries


class Network:
    def __init__(self, seed: int = 0, cs_capacity: int = DEFAULT_CS_CAPACITY,
                 interest_timeout: int = INTEREST_TIMEOUT):
        self.seed = seed
        self.rng = random.Random(seed)
        self.step = 0
        self.interest_timeout = interest_timeout
        self.content_store = ContentStore(cs_capacity)
        self.fib: list = []          # (prefix, entity_id) in registration order
        self.pit: dict = {}
        self.transcript = Transcript()
        self.received = Counter()    # Interests delivered to each entity
        self._handlers: dict = {}
        self._broadcast: list = []
        self._mailboxes: dict = {}
        self._addresses: dict = {}
        self._proximity: set = set()
        self.data_filter: Optional[Callable[[Data, str, str], Optional[Data]]] = None

    # -- entities and routes ----------------------------------------------------

    def add_entity(self, entity_id: str, handler: Optional[Handler] = None, broadcast: bool = False):
        if entity_id in self._handlers:
            raise ValueError(f"entity {entity_id!r} already registered")
        self._handlers[entity_id] = handler
        if broadcast:
            self._broadcast.append(entity_id)

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._handlers

    def set_handler(self, entity_id: str, handler: Handler):
        self._require(entity_id)
        self._handlers[entity_id] = handler

    def listen_broadcast(self, entity_id: str):
        self._require(entity_id)
        if entity_id not in self._broadcast:
            self._broadcast.append(entity_id)

    def register_prefix(self, entity_id: str, prefix: Name):
        self._require(entity_id)
        prefix = Name(prefix)
        if (prefix, entity_id) not in self.fib:
            self.fib.append((prefix, entity_id))

    def _require(self, entity_id):
        if entity_id not in self._handlers:
            raise KeyError(f"unknown entity {entity_id!r}")

    def _route(self, name: Name, exclude: str) -> Optional[str]:
        best, best_len = None, -1
        for prefix, eid in self.fib:
            if eid != exclude and prefix.is_prefix_of(name) and len(prefix) > best_len:
                best, best_len = eid, len(prefix)
        return best

    def _log(self, channel, event, src, dst, summary, size):
        self.transcript.append(TranscriptEvent(self.step, channel, event, src, dst, summary, size))

    # -- packet delivery ----------------------------------------------------------

    def express_interest(self, from_id: str, interest: Interest) -> Optional[Data]:
        self._require(from_id)
        self.step += 1
        self._log("ndn", "interest", from_id, "forwarder", str(interest.name), len(encode(interest)))
        cached = self.content_store.get(interest.name)
        if cached is not None:
            self.step += 1
            self._log("ndn", "cs-hit", "forwarder", from_id, str(cached.name), len(encode(cached)))
            return cached
        target = self._route(interest.name, from_id)
        if target is None and interest.forwarding_hint is not None:
            target = self._route(interest.forwarding_hint, from_id)
        if target is None:
            self._log("ndn", "no-route", "forwarder", from_id, str(interest.name), 0)
            raise NoRoute(str(interest.name))
        self.pit.setdefault(interest.name, []).append(from_id)
        try:
            return self._deliver(target, from_id, interest)
        finally:
            faces = self.pit.get(interest.name)
            if faces:
                faces.remove(from_id)
                if not faces:
                    del self.pit[interest.name]

    def _deliver(self, target: str, from_id: str, interest: Interest) -> Optional[Data]:
        self.step += 1
        self.received[target] += 1
        self._log("ndn", "deliver", "forwarder", target, str(interest.name), len(encode(interest)))
        handler = self._handlers[target]
        data = handler(interest, from_id) if handler else None
        if data is not None and not interest.name.is_prefix_of(data.name):
            data = None
        if data is not None and self.data_filter is not None:
            data = self.data_filter(data, target, from_id)
        if data is None:
            self.step += self.interest_timeout
            self._log("ndn", "timeout", "forwarder", from_id, str(interest.name), 0)
            return None
        self.step += 1
        self.content_store.put(data)
        self._log("ndn", "data", target, from_id, str(data.name), len(encode(data)))
        return data

    def broadcast_interest(self, from_id: str, interest: Interest) -> Optional[Data]:
        """Deliver to every broadcast listener; the first Data answer wins."""
        self._require(from_id)
        self.step += 1
        self._log("ndn", "interest", from_id, "broadcast", str(interest.name), len(encode(interest)))
        for eid in self._broadcast:
            if eid == from_id:
                continue
            data = self._deliver(eid, from_id, interest)
            if data is not None:
                return data
        return None

    # -- out-of-band channels -------------------------------------------------------

    def bind_address(self, entity_id: str, kind: OobKind, address: str):
        self._require(entity_id)
        self._addresses[(kind, address)] = entity_id

    def owner_of(self, kind: OobKind, address: str) -> str:
        return self._addresses.get((kind, address), address)

    def set_proximity(self, a: str, b: str, near: bool = True):
        pair = frozenset((a, b))
        if near:
            self._proximity.add(pair)
        else:
            self._proximity.discard(pair)

    def in_proximity(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self._proximity

    def oob_send(self, kind: OobKind, to: str, payload: bytes, sender: str = "") -> None:
        if kind is OobKind.VIBRATION and not self.in_proximity(sender, self.owner_of(kind, to)):
            raise ProximityViolation(f"{to!r} is not within vibration range of {sender!r}")
        self.step += 1
        self._mailboxes.setdefault((kind, to), deque()).append((sender, payload))
        self._log(kind.value.lower(), "oob", sender, to, f"{len(payload)} bytes", len(payload))

    def oob_broadcast(self, kind: OobKind, sender: str, payload: bytes) -> list:
        """Send to every entity near ``sender``; returns the recipients."""
        recipients = [eid for eid in self._handlers if eid != sender and self.in_proximity(sender, eid)]
        for eid in recipients:
            self.oob_send(kind, eid, payload, sender)
        return recipients

    def oob_recv(self, kind: OobKind, me: str, address: Optional[str] = None) -> bytes:
        address = address or me
        if self.owner_of(kind, address) != me:
            raise EmptyMailbox(f"{me!r} cannot read {address!r}")
        box = self._mailboxes.get((kind, address))
        if not box:
            raise EmptyMailbox(f"no {kind.value} message for {address!r}")
        _, payload = box.popleft()
        return payload
