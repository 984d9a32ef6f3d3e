"""Static network description: links, users, routes, and flow/price aggregation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


class TopologyError(ValueError):
    """Raised for inconsistent or malformed network definitions."""


@dataclass(frozen=True)
class Link:
    """A unidirectional link with capacity and delay parameters."""

    id: str
    capacity: float
    min_rate: float
    serv_delay: float = 0.0
    prop_delay: float = 0.0

    def __post_init__(self):
        if self.capacity <= 0:
            raise TopologyError(f"link {self.id}: capacity must be > 0")
        if not 0 < self.min_rate <= self.capacity:
            raise TopologyError(f"link {self.id}: need 0 < min_rate <= capacity")
        if self.serv_delay < 0 or self.prop_delay < 0:
            raise TopologyError(f"link {self.id}: delays must be >= 0")


@dataclass(frozen=True)
class User:
    """A traffic source with a fixed route and rate bounds."""

    id: str
    route: tuple[str, ...]
    x_max: float = 10.0
    x_min_req: float = 1.0
    buffer: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))
        if not self.route:
            raise TopologyError(f"user {self.id}: route is empty")
        if len(set(self.route)) != len(self.route):
            raise TopologyError(f"user {self.id}: route repeats a link")
        if not 0 < self.x_min_req <= self.x_max:
            raise TopologyError(f"user {self.id}: need 0 < x_min_req <= x_max")
        if self.buffer <= 0:
            raise TopologyError(f"user {self.id}: buffer must be > 0")


@dataclass(frozen=True)
class Network:
    """Immutable topology: links, users and the link->users incidence."""

    links: Mapping[str, Link]
    users: Mapping[str, User]
    incidence: Mapping[str, tuple[str, ...]]

    @property
    def link_ids(self) -> tuple[str, ...]:
        return tuple(self.links)

    @property
    def user_ids(self) -> tuple[str, ...]:
        return tuple(self.users)


def build_network(links: Iterable[Link], users: Iterable[User]) -> Network:
    """Assemble a Network, deriving incidence from routes.

    Iteration order is fixed by sorting ids so runs are reproducible.
    """
    link_map: dict[str, Link] = {}
    for link in sorted(links, key=lambda l: l.id):
        if link.id in link_map:
            raise TopologyError(f"duplicate link id {link.id!r}")
        link_map[link.id] = link

    user_map: dict[str, User] = {}
    for user in sorted(users, key=lambda u: u.id):
        if user.id in user_map:
            raise TopologyError(f"duplicate user id {user.id!r}")
        for lid in user.route:
            if lid not in link_map:
                raise TopologyError(f"user {user.id}: unknown link {lid!r} in route")
        user_map[user.id] = user

    incidence = {
        lid: tuple(uid for uid, u in user_map.items() if lid in u.route)
        for lid in link_map
    }
    return Network(links=link_map, users=user_map, incidence=incidence)


def aggregate_flow(network: Network, rates: Mapping[str, float]) -> dict[str, float]:
    """Per-link flow: sum of the rates of users traversing each link."""
    for uid in network.users:
        if uid not in rates:
            raise ValueError(f"missing rate for user {uid!r}")
        if rates[uid] < 0:
            raise ValueError(f"negative rate for user {uid!r}")
    return {
        lid: sum(rates[uid] for uid in network.incidence[lid])
        for lid in network.links
    }


def path_price(network: Network, link_prices: Mapping[str, float], user_id: str) -> float:
    """Price seen by a user: sum of link prices along its route."""
    user = network.users[user_id]
    for lid in user.route:
        if link_prices[lid] < 0:
            raise ValueError(f"negative price on link {lid!r}")
    return sum(link_prices[lid] for lid in user.route)


def single_link(capacity: float = 10.0, n_users: int = 3) -> Network:
    """One link shared by identical users, each starting at x_max."""
    link = Link("L0", capacity=capacity, min_rate=0.5, serv_delay=0.5)
    users = [User(f"u{i}", route=("L0",)) for i in range(n_users)]
    return build_network([link], users)


def parking_lot(capacity: float = 10.0) -> Network:
    """Three-link chain A-B-C-D; user i sits i+1 hops from D.

    u0 crosses CD only, u1 crosses BC+CD, u2 crosses all three, so CD is
    the shared bottleneck.
    """
    links = [
        Link("AB", capacity=capacity, min_rate=0.5, serv_delay=0.5),
        Link("BC", capacity=capacity, min_rate=0.5, serv_delay=0.5),
        Link("CD", capacity=capacity, min_rate=0.5, serv_delay=0.5),
    ]
    users = [
        User("u0", route=("CD",)),
        User("u1", route=("BC", "CD")),
        User("u2", route=("AB", "BC", "CD")),
    ]
    return build_network(links, users)


BUILTIN_NETWORKS = {
    "single-link": single_link,
    "parking-lot": parking_lot,
}


def load_topology(path: str) -> Network:
    """Parse a plain-text topology file.

    One declaration per line:
        link <id> capacity <f> min_rate <f> serv_delay <f> prop_delay <f>
        user <id> route <id,id,...> x_max <f> x_min <f> buffer <f>
    Lines starting with '#' are comments.
    """
    links: list[Link] = []
    users: list[User] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            kind, ident, fields = tokens[0], None, {}
            if len(tokens) < 2 or len(tokens) % 2 != 0:
                raise TopologyError(f"{path}:{lineno}: malformed declaration")
            ident = tokens[1]
            for key, value in zip(tokens[2::2], tokens[3::2]):
                fields[key] = value
            try:
                if kind == "link":
                    links.append(Link(
                        ident,
                        capacity=float(fields.pop("capacity")),
                        min_rate=float(fields.pop("min_rate")),
                        serv_delay=float(fields.pop("serv_delay", 0.0)),
                        prop_delay=float(fields.pop("prop_delay", 0.0)),
                    ))
                elif kind == "user":
                    users.append(User(
                        ident,
                        route=tuple(fields.pop("route").split(",")),
                        x_max=float(fields.pop("x_max", 10.0)),
                        x_min_req=float(fields.pop("x_min", 1.0)),
                        buffer=float(fields.pop("buffer", 50.0)),
                    ))
                else:
                    raise TopologyError(f"{path}:{lineno}: unknown declaration {kind!r}")
            except KeyError as exc:
                raise TopologyError(f"{path}:{lineno}: missing field {exc}") from None
            if fields:
                raise TopologyError(f"{path}:{lineno}: unknown fields {sorted(fields)}")
    return build_network(links, users)
