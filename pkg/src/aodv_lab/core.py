"""Routing tables, packet stores, messages and the pure functions over them.

Everything here is an immutable value.  Tables and stores are built once and
replaced wholesale by the functions below, which lets the explorer share
structure between states and hash them cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional

Address = str
Sqn = int
Data = str

KNOWN = "kno"
UNKNOWN = "unk"
VALID = "val"
INVALID = "inval"
PENDING = "pen"
NON_PENDING = "non-pen"


class IllFormedUpdate(ValueError):
    pass


def inc_sqn(n: Sqn) -> Sqn:
    """Increment a sequence number; 0 stays 0 (it means "unknown")."""
    return n + 1 if n != 0 else 0


def monus(n: int, m: int) -> int:
    return n - m if n > m else 0


class RouteEntry(NamedTuple):
    dip: Address
    dsn: Sqn
    dsk: str
    flag: str
    hops: int
    nhip: Address
    pre: frozenset = frozenset()

    def with_pre(self, pre: frozenset) -> "RouteEntry":
        return self._replace(pre=pre)

    def text(self) -> str:
        pre = "{" + ",".join(sorted(self.pre)) + "}"
        return f"({self.dip},{self.dsn},{self.dsk},{self.flag},{self.hops},{self.nhip},{pre})"


class RoutingTable:
    """A set of route entries with at most one entry per destination.

    Instances are treated as immutable; every operation returns a new table.
    """

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries: Iterable[RouteEntry] | Mapping[Address, RouteEntry] = ()):
        if isinstance(entries, Mapping):
            self._entries = dict(entries)
        else:
            self._entries = {}
            for e in entries:
                if e.dip in self._entries:
                    raise ValueError(f"duplicate entry for destination {e.dip}")
                self._entries[e.dip] = e
        self._hash = None

    def get(self, dip: Address) -> Optional[RouteEntry]:
        return self._entries.get(dip)

    def __contains__(self, dip: Address) -> bool:
        return dip in self._entries

    def __iter__(self) -> Iterator[RouteEntry]:
        return iter(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def destinations(self):
        return self._entries.keys()

    def replace(self, entry: RouteEntry) -> "RoutingTable":
        d = dict(self._entries)
        d[entry.dip] = entry
        return RoutingTable(d)

    def canonical(self) -> tuple:
        return tuple(sorted((e.dip, e.dsn, e.dsk, e.flag, e.hops, e.nhip, tuple(sorted(e.pre)))
                            for e in self._entries.values()))

    def __eq__(self, other) -> bool:
        return isinstance(other, RoutingTable) and self._entries == other._entries

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._entries.values()))
        return self._hash

    def __repr__(self) -> str:
        return "{" + ", ".join(e.text() for e in sorted(self._entries.values())) + "}"

    # partial projections; absent destinations give None (or the total defaults)

    def sqn(self, dip: Address) -> Sqn:
        e = self._entries.get(dip)
        return e.dsn if e is not None else 0

    def sqnf(self, dip: Address) -> str:
        e = self._entries.get(dip)
        return e.dsk if e is not None else UNKNOWN

    def flag(self, dip: Address) -> Optional[str]:
        e = self._entries.get(dip)
        return e.flag if e is not None else None

    def dhops(self, dip: Address) -> Optional[int]:
        e = self._entries.get(dip)
        return e.hops if e is not None else None

    def nhop(self, dip: Address) -> Optional[Address]:
        e = self._entries.get(dip)
        return e.nhip if e is not None else None

    def precs(self, dip: Address) -> Optional[frozenset]:
        e = self._entries.get(dip)
        return e.pre if e is not None else None

    def is_valid(self, dip: Address) -> bool:
        e = self._entries.get(dip)
        return e is not None and e.flag == VALID

    def is_invalid(self, dip: Address) -> bool:
        e = self._entries.get(dip)
        return e is not None and e.flag == INVALID

    def vD(self) -> frozenset:
        return frozenset(d for d, e in self._entries.items() if e.flag == VALID)

    def iD(self) -> frozenset:
        return frozenset(d for d, e in self._entries.items() if e.flag == INVALID)

    def kD(self) -> frozenset:
        return frozenset(self._entries)


EMPTY_RT = RoutingTable()


def nsqn(rt: RoutingTable, dip: Address) -> Sqn:
    """Net sequence number: sqn for valid entries (or sqn 0), sqn-1 otherwise."""
    e = rt.get(dip)
    if e is None:
        return 0
    if e.flag == VALID or e.dsn == 0:
        return e.dsn
    return e.dsn - 1


def entry_nsqn(e: RouteEntry) -> Sqn:
    if e.flag == VALID or e.dsn == 0:
        return e.dsn
    return e.dsn - 1


WORSE = "worse"
EQUIVALENT = "equivalent"
BETTER = "better"
ABSENT = "incomparable-absent"


def quality_key(rt: RoutingTable, dip: Address):
    e = rt.get(dip)
    if e is None:
        return None
    return (entry_nsqn(e), -e.hops)


def quality_compare(rt_a: RoutingTable, rt_b: RoutingTable, dip: Address) -> str:
    """Compare the quality of the routes to dip; BETTER means rt_b is strictly better."""
    a, b = quality_key(rt_a, dip), quality_key(rt_b, dip)
    if a is None or b is None:
        return ABSENT
    if a == b:
        return EQUIVALENT
    return BETTER if a < b else WORSE


def destination_sets(rt: RoutingTable, store: "Store"):
    return rt.vD(), rt.iD(), rt.kD(), store.qD()


def add_precursors(rt: RoutingTable, dip: Address, npre: Iterable[Address]) -> RoutingTable:
    e = rt.get(dip)
    if e is None:
        raise KeyError(f"no entry for {dip}")
    merged = e.pre | frozenset(npre)
    if merged == e.pre:
        return rt
    return rt.replace(e.with_pre(merged))


def add_precursors_if_known(rt: RoutingTable, dip: Optional[Address], npre) -> RoutingTable:
    """addpreRT as used inside the processes: a no-op when dip has no entry."""
    if dip is None or dip not in rt:
        return rt
    return add_precursors(rt, dip, npre)


UPDATE_VARIANTS = ("2a", "2b", "2c", "2d", "2e")


def check_update_entry(r: RouteEntry) -> None:
    if r.flag != VALID:
        raise IllFormedUpdate(f"ill-formed update entry {r.text()}: not valid")
    if (r.dsn == 0) != (r.dsk == UNKNOWN):
        raise IllFormedUpdate(f"ill-formed update entry {r.text()}: dsn/dsk mismatch")
    if r.dsk == UNKNOWN and r.hops != 1:
        raise IllFormedUpdate(f"ill-formed update entry {r.text()}: unknown dsn with hops != 1")


def update_route(rt: RoutingTable, r: RouteEntry, variant: str = "2c", *,
                 rrep: bool = False, skip_invalid_clause: bool = False) -> RoutingTable:
    """Merge the route r into rt.

    variant selects how an entry with unknown sequence number is treated.
    rrep=True applies the overlay used for route replies under resolution 1a:
    an existing entry whose sequence number is unknown is always replaced.
    skip_invalid_clause drops the clause that lets an equally fresh route
    replace an invalid one (resolution 4b).
    """
    check_update_entry(r)
    s = rt.get(r.dip)
    if s is None:
        return rt.replace(r)
    nr = r.with_pre(r.pre | s.pre)
    known_only = variant in ("2d", "2e")
    r_known = r.dsk == KNOWN
    if rrep and s.dsk == UNKNOWN:
        return rt.replace(nr)
    if s.dsn < r.dsn:
        return rt.replace(nr)
    if s.dsn == r.dsn and s.hops > r.hops and (r_known or not known_only):
        return rt.replace(nr)
    if (not skip_invalid_clause and s.dsn == r.dsn and s.flag == INVALID
            and (r_known or not known_only)):
        return rt.replace(nr)
    if not r_known and variant != "2a":
        if variant == "2b":
            new = nr
        elif variant == "2c":
            new = nr._replace(dsn=s.dsn)
        elif variant == "2d":
            new = nr._replace(dsn=s.dsn, dsk=s.dsk)
        elif variant == "2e":
            dsn = s.dsn if s.flag == VALID else monus(s.dsn, 1)
            new = nr._replace(dsn=dsn, dsk=s.dsk)
        else:
            raise ValueError(f"unknown update variant {variant!r}")
        return rt.replace(new)
    ns = s.with_pre(s.pre | r.pre)
    if ns == s:
        return rt
    return rt.replace(ns)


INVALIDATE_VARIANTS = ("8a", "8b", "8c", "8d", "8e", "8f")


def invalidate_routes(rt: RoutingTable, dests: Mapping[Address, Sqn] | Iterable,
                      variant: str = "8f") -> RoutingTable:
    """Mark every listed destination invalid and set its sequence number.

    The default copies the sequence number from dests; 8c keeps the larger of
    the two and 8d/8e additionally increment the stored one first.
    """
    items = dests.items() if isinstance(dests, Mapping) else dests
    d = None
    for rip, rsn in items:
        e = rt.get(rip)
        if e is None:
            continue
        if variant == "8c":
            sqn = max(e.dsn, rsn)
        elif variant in ("8d", "8e"):
            sqn = max(inc_sqn(e.dsn), rsn)
        else:
            sqn = rsn
        if d is None:
            d = dict(rt._entries)
        d[rip] = e._replace(flag=INVALID, dsn=sqn)
    return rt if d is None else RoutingTable(d)


def new_rreq_id(rreqs: Iterable, ip: Address) -> int:
    return max((n for (o, n) in rreqs if o == ip), default=0) + 1


@dataclass(frozen=True)
class Store:
    """Per-destination FIFO queues of data, each with a request-required flag."""

    queues: tuple = ()  # sorted tuple of (dip, flag, (data, ...))

    def as_dict(self) -> dict:
        return {dip: (flag, q) for dip, flag, q in self.queues}

    @staticmethod
    def from_dict(d: Mapping) -> "Store":
        return Store(tuple(sorted((dip, f, tuple(q)) for dip, (f, q) in d.items())))

    def qD(self) -> frozenset:
        return frozenset(dip for dip, _, _ in self.queues)

    def __contains__(self, dip) -> bool:
        return any(d == dip for d, _, _ in self.queues)

    def flag(self, dip: Address) -> Optional[str]:
        for d, f, _ in self.queues:
            if d == dip:
                return f
        return None

    def head(self, dip: Address) -> Optional[Data]:
        for d, _, q in self.queues:
            if d == dip:
                return q[0]
        return None

    def queue(self, dip: Address) -> tuple:
        for d, _, q in self.queues:
            if d == dip:
                return q
        return ()


EMPTY_STORE = Store()


def store_add(d: Data, dip: Address, store: Store) -> Store:
    m = store.as_dict()
    if dip in m:
        flag, q = m[dip]
        m[dip] = (flag, q + (d,))
    else:
        m[dip] = (NON_PENDING, (d,))
    return Store.from_dict(m)


def store_drop(dip: Address, store: Store) -> Store:
    m = store.as_dict()
    if dip not in m:
        raise KeyError(f"drop on empty destination {dip}")
    flag, q = m[dip]
    if len(q) == 1:
        del m[dip]
    else:
        m[dip] = (flag, q[1:])
    return Store.from_dict(m)


def unset_rrf(store: Store, dip: Address) -> Store:
    """Mark a route request for dip as sent (pending)."""
    return store_set_flag(store, [dip], PENDING)


def set_rrf(store: Store, dests: Iterable) -> Store:
    """Request a new route discovery for every destination listed in dests."""
    ds = dests.keys() if isinstance(dests, Mapping) else [rip for rip, _ in dests]
    return store_set_flag(store, ds, NON_PENDING)


def store_set_flag(store: Store, dips: Iterable[Address], value: str) -> Store:
    targets = set(dips)
    if not any(d in targets and f != value for d, f, _ in store.queues):
        return store
    return Store(tuple((d, value if d in targets else f, q) for d, f, q in store.queues))


# messages


@dataclass(frozen=True)
class Rreq:
    hops: int
    rreqid: Optional[int]
    dip: Address
    dsn: Sqn
    dsk: str
    oip: Address
    osn: Sqn
    sip: Address
    handled: Optional[bool] = None

    def text(self) -> str:
        parts = [str(self.hops)]
        if self.rreqid is not None:
            parts.append(str(self.rreqid))
        parts += [self.dip, str(self.dsn), self.dsk, self.oip, str(self.osn), self.sip]
        if self.handled is not None:
            parts.append("handled" if self.handled else "fresh")
        return "RREQ{" + ",".join(parts) + "}"


@dataclass(frozen=True)
class Rrep:
    hops: int
    dip: Address
    dsn: Sqn
    oip: Address
    sip: Address

    def text(self) -> str:
        return f"RREP{{{self.hops},{self.dip},{self.dsn},{self.oip},{self.sip}}}"


@dataclass(frozen=True)
class Rerr:
    dests: tuple  # sorted ((rip, rsn), ...)
    sip: Address

    def text(self) -> str:
        ds = ",".join(f"({rip},{rsn})" for rip, rsn in self.dests)
        return f"RERR{{[{ds}],{self.sip}}}"


@dataclass(frozen=True)
class Pkt:
    data: Data
    dip: Address
    oip: Address

    def text(self) -> str:
        return f'PKT{{"{self.data}",{self.dip},{self.oip}}}'


@dataclass(frozen=True)
class Newpkt:
    data: Data
    dip: Address

    def text(self) -> str:
        return f'NEWPKT{{"{self.data}",{self.dip}}}'


def make_rerr(dests: Mapping[Address, Sqn] | Iterable, sip: Address) -> Rerr:
    items = dests.items() if isinstance(dests, Mapping) else dests
    return Rerr(tuple(sorted(items)), sip)


CONTROL = (Rreq, Rrep, Rerr)
