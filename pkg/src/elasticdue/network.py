"""Network topology, OD pairs, path sets and the JSON network document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Any, Iterable

import numpy as np

from .demand import InverseDemandSpec
from .errors import InvalidArgumentError, ParseError, ValidationError

DEFAULT_MAX_PATHS = 32


@dataclass(frozen=True)
class Link:
    id: str
    tail: str
    head: str
    alpha: float  # free-flow traversal time
    beta: float  # delay added per vehicle of occupancy

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValidationError(f"link {self.id!r}: alpha must be > 0, got {self.alpha}")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValidationError(f"link {self.id!r}: beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class OdPair:
    origin: str
    destination: str
    inverse_demand: InverseDemandSpec

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValidationError(f"OD pair origin equals destination ({self.origin!r})")

    @property
    def label(self) -> str:
        return f"{self.origin}->{self.destination}"


@dataclass(frozen=True)
class Path:
    id: str
    od_index: int
    links: tuple[str, ...]


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    od_pairs: tuple[OdPair, ...]
    paths: tuple[Path, ...]
    link_index: dict[str, int] = field(init=False, repr=False, compare=False)
    path_od: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "link_index", {lk.id: i for i, lk in enumerate(self.links)})
        path_od = np.array([p.od_index for p in self.paths], dtype=int)
        path_od.setflags(write=False)
        object.__setattr__(self, "path_od", path_od)
        _validate(self)

    def link(self, link_id: str) -> Link:
        return self.links[self.link_index[link_id]]

    def paths_of(self, od_index: int) -> list[int]:
        return [i for i, p in enumerate(self.paths) if p.od_index == od_index]

    def free_flow_times(self) -> np.ndarray:
        return np.array([sum(self.link(a).alpha for a in p.links) for p in self.paths])

    def with_paths(self, paths: Iterable[Path]) -> Network:
        return Network(self.nodes, self.links, self.od_pairs, tuple(paths))


def _validate(net: Network) -> None:
    node_set = set(net.nodes)
    if len(node_set) != len(net.nodes):
        raise ValidationError("duplicate node id")
    if len(net.link_index) != len(net.links):
        raise ValidationError("duplicate link id")
    for lk in net.links:
        for end in (lk.tail, lk.head):
            if end not in node_set:
                raise ValidationError(f"link {lk.id!r} references unknown node {end!r}")
    for od in net.od_pairs:
        for end in (od.origin, od.destination):
            if end not in node_set:
                raise ValidationError(f"OD pair {od.label} references unknown node {end!r}")
    seen_ids = set()
    for p in net.paths:
        if p.id in seen_ids:
            raise ValidationError(f"duplicate path id {p.id!r}")
        seen_ids.add(p.id)
        _check_path(net, p)
    for i, od in enumerate(net.od_pairs):
        if not any(p.od_index == i for p in net.paths):
            raise ValidationError(f"OD pair {i} ({od.label}) has no path")


def _check_path(net: Network, p: Path) -> None:
    if not 0 <= p.od_index < len(net.od_pairs):
        raise ValidationError(f"path {p.id!r} references unknown OD index {p.od_index}")
    if not p.links:
        raise ValidationError(f"path {p.id!r} has no links")
    for a in p.links:
        if a not in net.link_index:
            raise ValidationError(f"path {p.id!r} references unknown link {a!r}")
    od = net.od_pairs[p.od_index]
    links = [net.link(a) for a in p.links]
    if links[0].tail != od.origin or links[-1].head != od.destination:
        raise ValidationError(f"path {p.id!r} does not run from {od.origin!r} to {od.destination!r}")
    for prev, nxt in zip(links, links[1:]):
        if prev.head != nxt.tail:
            raise ValidationError(f"path {p.id!r}: links {prev.id!r} and {nxt.id!r} are not consecutive")
    visited = [links[0].tail] + [lk.head for lk in links]
    if len(set(visited)) != len(visited):
        raise ValidationError(f"path {p.id!r} is not simple")


def _simple_paths(
    nodes: Iterable[str], links: Iterable[Link], origin: str, destination: str, max_paths: int
) -> list[tuple[str, ...]]:
    outgoing: dict[str, list[Link]] = {n: [] for n in nodes}
    for lk in sorted(links, key=lambda lk: lk.id):
        outgoing[lk.tail].append(lk)
    found: list[tuple[str, ...]] = []
    # sorted-children DFS emits sequences in lexicographic order
    stack: list[tuple[str, tuple[str, ...], frozenset[str]]] = [(origin, (), frozenset([origin]))]
    while stack and len(found) < max_paths:
        node, seq, visited = stack.pop()
        if node == destination:
            found.append(seq)
            continue
        for lk in reversed(outgoing[node]):
            if lk.head not in visited:
                stack.append((lk.head, seq + (lk.id,), visited | {lk.head}))
    return found


def enumerate_paths(
    network: Network, od: OdPair, max_paths: int = DEFAULT_MAX_PATHS, od_index: int | None = None
) -> list[Path]:
    """All simple directed paths for ``od`` in lexicographic link-id order, capped at ``max_paths``."""
    if od.origin not in network.nodes or od.destination not in network.nodes:
        raise InvalidArgumentError(f"OD pair {od.label} references a node outside the network")
    if max_paths < 1:
        raise InvalidArgumentError("max_paths must be >= 1")
    if od_index is None:
        od_index = network.od_pairs.index(od) if od in network.od_pairs else 0
    found = _simple_paths(network.nodes, network.links, od.origin, od.destination, max_paths)
    return [Path(f"od{od_index}_p{n}", od_index, seq) for n, seq in enumerate(found)]


_TOP_KEYS = {"nodes", "links", "od_pairs", "paths"}
_LINK_KEYS = {"id", "from", "to", "alpha", "beta"}
_OD_KEYS = {"origin", "destination", "inverse_demand"}
_DEMAND_KEYS = {"type", "a", "b"}
_PATH_KEYS = {"id", "od_index", "links"}


def _require(obj: Any, keys: set[str], where: str, optional: set[str] = frozenset()) -> None:
    if not isinstance(obj, dict):
        raise ParseError("expected an object", where)
    unknown = set(obj) - keys - optional
    if unknown:
        raise ParseError(f"unknown key(s) {sorted(unknown)}", where)
    missing = keys - set(obj)
    if missing:
        raise ParseError(f"missing key(s) {sorted(missing)}", where)


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", where)
    return float(value)


def _string(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise ParseError(f"expected a string, got {value!r}", where)
    return value


def _list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise ParseError("expected an array", where)
    return value


def network_from_dict(doc: Any, max_paths: int = DEFAULT_MAX_PATHS) -> Network:
    _require(doc, _TOP_KEYS - {"paths"}, "$", optional={"paths"})
    nodes = tuple(_string(n, f"$.nodes[{i}]") for i, n in enumerate(_list(doc["nodes"], "$.nodes")))

    links = []
    for i, raw in enumerate(_list(doc["links"], "$.links")):
        where = f"$.links[{i}]"
        _require(raw, _LINK_KEYS, where)
        links.append(
            Link(
                _string(raw["id"], where + ".id"),
                _string(raw["from"], where + ".from"),
                _string(raw["to"], where + ".to"),
                _number(raw["alpha"], where + ".alpha"),
                _number(raw["beta"], where + ".beta"),
            )
        )

    od_pairs = []
    for i, raw in enumerate(_list(doc["od_pairs"], "$.od_pairs")):
        where = f"$.od_pairs[{i}]"
        _require(raw, _OD_KEYS, where)
        dem = raw["inverse_demand"]
        _require(dem, _DEMAND_KEYS, where + ".inverse_demand")
        if dem["type"] != "linear":
            raise ParseError(f"unsupported inverse demand type {dem['type']!r}", where + ".inverse_demand.type")
        try:
            spec = InverseDemandSpec(
                _number(dem["a"], where + ".inverse_demand.a"), _number(dem["b"], where + ".inverse_demand.b")
            )
        except InvalidArgumentError as exc:
            raise ValidationError(f"OD pair {i}: {exc}") from exc
        od_pairs.append(
            OdPair(_string(raw["origin"], where + ".origin"), _string(raw["destination"], where + ".destination"), spec)
        )
    if not od_pairs:
        raise ValidationError("network has no OD pairs")

    if "paths" in doc:
        paths = []
        for i, raw in enumerate(_list(doc["paths"], "$.paths")):
            where = f"$.paths[{i}]"
            _require(raw, _PATH_KEYS, where)
            od_index = raw["od_index"]
            if isinstance(od_index, bool) or not isinstance(od_index, int):
                raise ParseError(f"expected an integer, got {od_index!r}", where + ".od_index")
            seq = tuple(_string(a, f"{where}.links[{j}]") for j, a in enumerate(_list(raw["links"], where + ".links")))
            paths.append(Path(_string(raw["id"], where + ".id"), od_index, seq))
        return Network(nodes, tuple(links), tuple(od_pairs), tuple(paths))

    if max_paths < 1:
        raise InvalidArgumentError("max_paths must be >= 1")
    for lk in links:
        for end in (lk.tail, lk.head):
            if end not in nodes:
                raise ValidationError(f"link {lk.id!r} references unknown node {end!r}")
    paths = []
    for i, od in enumerate(od_pairs):
        for end in (od.origin, od.destination):
            if end not in nodes:
                raise ValidationError(f"OD pair {od.label} references unknown node {end!r}")
        found = _simple_paths(nodes, links, od.origin, od.destination, max_paths)
        if not found:
            raise ValidationError(f"OD pair {i} ({od.label}) has no path")
        paths.extend(Path(f"od{i}_p{n}", i, seq) for n, seq in enumerate(found))
    return Network(nodes, tuple(links), tuple(od_pairs), tuple(paths))


def parse_network(document: str, max_paths: int = DEFAULT_MAX_PATHS) -> Network:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return network_from_dict(doc, max_paths)


def load_network(path: str | FilePath, max_paths: int = DEFAULT_MAX_PATHS) -> Network:
    return parse_network(FilePath(path).read_text(encoding="utf-8"), max_paths)
