"""Sequential Parallel DEVS simulation kernel.

Models are described with :class:`AtomicModel` and :class:`CoupledModel`.
:func:`build_engine` validates a model tree and wraps it in a hierarchy of
coordinators that mirrors the tree; the resulting :class:`SimulationEngine`
executes zero-time microsteps in the usual PDEVS order:

1. every imminent atomic fires its output function,
2. all outputs are routed along the couplings,
3. each touched atomic applies exactly one of delta_int / delta_ext /
   delta_con depending on whether it was imminent and whether its bag is
   empty.

Routes are resolved once per source port when the engine is built, so the
timed part of a run never walks the coupling relations. The coordinator tree
is still used to find imminent atomics and to keep next-event times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

INFINITY = math.inf
DEFAULT_TRANSITION_BUDGET = 10**10

IN = "in"
OUT = "out"


class KernelError(Exception):
    """Base class for errors raised by the simulation kernel."""


class StructureError(KernelError):
    """A coupled model references ports that do not exist or point the wrong way."""


class InjectionError(KernelError):
    pass


class SimulationHalted(KernelError):
    """Raised by :meth:`SimulationEngine.step` when nothing is left to simulate."""


class RunawaySimulationError(KernelError):
    pass


class Port:
    """An input or output port, identified by (owner, direction, index)."""

    __slots__ = ("owner", "direction", "index", "name")

    def __init__(self, owner: Model, direction: str, index: int, name: str):
        self.owner = owner
        self.direction = direction
        self.index = index
        self.name = name

    @property
    def path(self) -> str:
        return f"{self.owner.path}.{self.name}"

    def __repr__(self) -> str:
        return f"<Port {self.path} ({self.direction}{self.index})>"


class Model:
    """Common part of atomic and coupled models: a name, a parent and ports."""

    def __init__(self, name: str):
        self.name = name
        self.parent: Optional[CoupledModel] = None
        self.in_ports: List[Port] = []
        self.out_ports: List[Port] = []

    def add_in_port(self, name: Optional[str] = None) -> Port:
        port = Port(self, IN, len(self.in_ports), name or f"i{len(self.in_ports)}")
        self.in_ports.append(port)
        return port

    def add_out_port(self, name: Optional[str] = None) -> Port:
        port = Port(self, OUT, len(self.out_ports), name or f"o{len(self.out_ports)}")
        self.out_ports.append(port)
        return port

    @property
    def path(self) -> str:
        if self.parent is None:
            return self.name
        return f"{self.parent.path}/{self.name}"

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.path}>"


class AtomicModel(Model):
    """Behavioral unit of a PDEVS model.

    Subclasses provide ``initial_state`` and override the transition, output
    and time-advance functions. Every function receives the current state
    explicitly and returns a new one; the engine owns the state between calls.
    Bags are dicts mapping an input port to the list of values received on it
    during the current microstep.
    """

    initial_state: Any = None

    def delta_int(self, state):
        raise NotImplementedError

    def delta_ext(self, state, elapsed: float, bag: Dict[Port, List[Any]]):
        raise NotImplementedError

    def delta_con(self, state, bag: Dict[Port, List[Any]]):
        return self.delta_ext(self.delta_int(state), 0.0, bag)

    def output(self, state) -> Dict[Port, List[Any]]:
        """The output function (lambda). Returns values per output port."""
        raise NotImplementedError

    def ta(self, state) -> float:
        raise NotImplementedError


class CoupledModel(Model):
    """Component tree plus its EIC, EOC and IC coupling relations.

    :meth:`connect` sorts a coupling into one of the three relations by
    looking at who owns the endpoints. Nothing is checked until the model is
    handed to :func:`build_engine`.
    """

    def __init__(self, name: str):
        super().__init__(name)
        self.components: List[Model] = []
        self.eic: List[tuple] = []
        self.eoc: List[tuple] = []
        self.ic: List[tuple] = []

    def add_component(self, component: Model) -> Model:
        component.parent = self
        self.components.append(component)
        return component

    def connect(self, src: Port, dst: Port) -> None:
        if src.owner is self:
            self.eic.append((src, dst))
        elif dst.owner is self:
            self.eoc.append((src, dst))
        else:
            self.ic.append((src, dst))

    def couplings(self) -> Iterable[tuple]:
        yield from self.eic
        yield from self.eoc
        yield from self.ic


def _coupling_text(kind: str, model: CoupledModel, src: Port, dst: Port) -> str:
    return f"{kind} {src.path} -> {dst.path} in {model.path}"


def validate(model: CoupledModel) -> None:
    """Raise :class:`StructureError` for the first malformed coupling found."""
    stack = [model]
    while stack:
        coupled = stack.pop()
        children = {id(c) for c in coupled.components}
        for c in coupled.components:
            if c.parent is not coupled:
                raise StructureError(f"{c!r} is listed in {coupled.path} but has another parent")
            if isinstance(c, CoupledModel):
                stack.append(c)

        def check_child_port(kind, src, dst, port, direction):
            if id(port.owner) not in children:
                raise StructureError(
                    _coupling_text(kind, coupled, src, dst)
                    + f": {port.path} does not belong to a component of {coupled.path}"
                )
            ports = port.owner.in_ports if direction == IN else port.owner.out_ports
            if port.direction != direction or port not in ports:
                raise StructureError(
                    _coupling_text(kind, coupled, src, dst)
                    + f": {port.path} is not an existing {direction}put port"
                )

        for src, dst in coupled.eic:
            if src.owner is not coupled or src.direction != IN or src not in coupled.in_ports:
                raise StructureError(
                    _coupling_text("EIC", coupled, src, dst)
                    + f": source must be an input port of {coupled.path}"
                )
            check_child_port("EIC", src, dst, dst, IN)
        for src, dst in coupled.eoc:
            check_child_port("EOC", src, dst, src, OUT)
            if dst.owner is not coupled or dst.direction != OUT or dst not in coupled.out_ports:
                raise StructureError(
                    _coupling_text("EOC", coupled, src, dst)
                    + f": destination must be an output port of {coupled.path}"
                )
        for src, dst in coupled.ic:
            check_child_port("IC", src, dst, src, OUT)
            check_child_port("IC", src, dst, dst, IN)
            if src.owner is dst.owner:
                raise StructureError(
                    _coupling_text("IC", coupled, src, dst) + ": self-loop on one component"
                )


@dataclass
class SimulationStats:
    n_internal: int = 0
    n_external: int = 0
    n_confluent: int = 0
    n_lambda: int = 0
    n_messages_routed: int = 0
    n_messages_discarded: int = 0
    n_messages_delivered: int = 0
    n_messages_forwarded: int = 0
    n_messages_emitted: int = 0
    n_injected: int = 0
    final_time: float = 0.0

    @property
    def n_transitions(self) -> int:
        return self.n_internal + self.n_external + self.n_confluent


@dataclass(frozen=True)
class StepReport:
    advanced_to: float
    imminent_count: int
    transitions: int


@dataclass(frozen=True)
class RouteInfo:
    deliveries: List[tuple]
    hops: int
    forwards: int
    discards: int


class _Route:
    """Precomputed fan-out of one source port.

    ``dests`` lists (simulator, input port) for every copy that ends at an
    atomic input, with multiplicity. Per message entering the port, ``hops``
    counts coupling traversals, ``forwards`` the ports that passed a copy on
    and ``discards`` the dead ends (unconnected ports, root outputs).
    """

    __slots__ = ("dests", "hops", "forwards", "discards", "count")

    def __init__(self, dests, hops, forwards, discards):
        self.dests = dests
        self.hops = hops
        self.forwards = forwards
        self.discards = discards
        self.count = 0


class AtomicSimulator:
    __slots__ = ("model", "state", "t_last", "t_next", "bag", "parent", "index", "routes")

    def __init__(self, model: AtomicModel):
        self.model = model
        self.state = model.initial_state
        self.t_last = 0.0
        self.t_next = model.ta(self.state)
        self.bag: Dict[Port, List[Any]] = {}
        self.parent: Optional[Coordinator] = None
        self.index = 0
        self.routes: Dict[Port, _Route] = {}


class Coordinator:
    """Keeps the next-event times of its children and finds imminent atomics."""

    __slots__ = ("model", "children", "child_tn", "t_next", "parent", "index")

    def __init__(self, model: CoupledModel):
        self.model = model
        self.children: list = []
        self.child_tn: List[float] = []
        self.t_next = INFINITY
        self.parent: Optional[Coordinator] = None
        self.index = 0

    def collect_imminent(self, t: float, out: list) -> None:
        stack = [self]
        while stack:
            coord = stack.pop()
            for child, tn in zip(coord.children, coord.child_tn):
                if tn == t:
                    if type(child) is AtomicSimulator:
                        out.append(child)
                    else:
                        stack.append(child)


def _build_tree(model: CoupledModel, atomics: Dict[int, AtomicSimulator]) -> Coordinator:
    root = Coordinator(model)
    order = [root]
    stack = [root]
    while stack:
        coord = stack.pop()
        for i, comp in enumerate(coord.model.components):
            if isinstance(comp, CoupledModel):
                child = Coordinator(comp)
                stack.append(child)
                order.append(child)
            elif isinstance(comp, AtomicModel):
                child = AtomicSimulator(comp)
                atomics[id(comp)] = child
            else:
                raise StructureError(f"{comp!r} is neither atomic nor coupled")
            child.parent = coord
            child.index = i
            coord.children.append(child)
            coord.child_tn.append(child.t_next)
    # children before parents so each coordinator sees settled child times
    for coord in reversed(order):
        coord.t_next = min(coord.child_tn, default=INFINITY)
        if coord.parent is not None:
            coord.parent.child_tn[coord.index] = coord.t_next
    return root


def _outgoing_index(model: CoupledModel) -> Dict[Port, List[Port]]:
    index: Dict[Port, List[Port]] = {}
    stack = [model]
    while stack:
        coupled = stack.pop()
        for src, dst in coupled.couplings():
            index.setdefault(src, []).append(dst)
        stack.extend(c for c in coupled.components if isinstance(c, CoupledModel))
    return index


def _resolve(port: Port, outgoing, atomics) -> _Route:
    dests = []
    hops = forwards = discards = 0
    stack = [port]
    while stack:
        p = stack.pop()
        nxt = outgoing.get(p)
        if nxt:
            hops += len(nxt)
            forwards += 1
            # reversed keeps delivery order equal to coupling declaration order
            stack.extend(reversed(nxt))
        elif p.direction == IN and p is not port and isinstance(p.owner, AtomicModel):
            dests.append((atomics[id(p.owner)], p))
        else:
            discards += 1
    return _Route(dests, hops, forwards, discards)


class SimulationEngine:
    """Drives a coordinator tree built by :func:`build_engine`."""

    def __init__(self, model: CoupledModel):
        self.model = model
        atomics: Dict[int, AtomicSimulator] = {}
        self.root = _build_tree(model, atomics)
        self.atomics = list(atomics.values())
        outgoing = _outgoing_index(model)
        self._routes: List[_Route] = []
        for sim in self.atomics:
            for port in sim.model.out_ports:
                route = _resolve(port, outgoing, atomics)
                sim.routes[port] = route
                self._routes.append(route)
        self._input_routes: Dict[Port, _Route] = {}
        for port in model.in_ports:
            route = _resolve(port, outgoing, atomics)
            self._input_routes[port] = route
            self._routes.append(route)
        self.clock = 0.0
        self._injections: List[tuple] = []
        self._started = False
        self._counts = [0, 0, 0, 0]  # internal, external, confluent, lambda
        self._n_injected = 0

    @property
    def t_next(self) -> float:
        return self.root.t_next

    @property
    def pending_injections(self) -> int:
        return len(self._injections)

    @property
    def halted(self) -> bool:
        return self.root.t_next == INFINITY and not self._injections

    @property
    def stats(self) -> SimulationStats:
        n_int, n_ext, n_con, n_lambda = self._counts
        stats = SimulationStats(
            n_internal=n_int,
            n_external=n_ext,
            n_confluent=n_con,
            n_lambda=n_lambda,
            n_injected=self._n_injected,
            final_time=self.clock,
        )
        for route in self._routes:
            stats.n_messages_routed += route.count * route.hops
            stats.n_messages_discarded += route.count * route.discards
            stats.n_messages_delivered += route.count * len(route.dests)
            stats.n_messages_forwarded += route.count * route.forwards
        stats.n_messages_emitted = (
            sum(r.count for r in self._routes) - self._n_injected
        )
        return stats

    def route_info(self, port: Port) -> RouteInfo:
        """Where one message leaving ``port`` ends up.

        ``port`` is an atomic output port or an input port of the root model.
        """
        route = self._input_routes.get(port)
        if route is None and isinstance(port.owner, AtomicModel):
            sim = next((s for s in self.atomics if s.model is port.owner), None)
            route = sim.routes.get(port) if sim is not None else None
        if route is None:
            raise KeyError(f"{port!r} is not a message source of this engine")
        return RouteInfo(
            [(sim.model, p) for sim, p in route.dests],
            route.hops,
            route.forwards,
            route.discards,
        )

    def inject(self, targets: Iterable[Port], payload: int = 0) -> None:
        if self._started:
            raise InjectionError("cannot inject into an engine that has already run")
        targets = list(targets)
        for port in targets:
            if port not in self._input_routes:
                raise InjectionError(f"{port!r} is not an input port of the root model")
        for port in targets:
            self._injections.append((port, payload))

    def step(self) -> StepReport:
        if self.halted:
            raise SimulationHalted(f"no pending events at t={self.clock}")
        self._started = True
        root = self.root
        t = root.t_next
        if self._injections:
            t = min(t, self.clock)

        imminent: List[AtomicSimulator] = []
        if root.t_next == t:
            root.collect_imminent(t, imminent)

        receivers: List[AtomicSimulator] = []
        if self._injections:
            for port, payload in self._injections:
                route = self._input_routes[port]
                route.count += 1
                for sim, dport in route.dests:
                    bag = sim.bag
                    if not bag:
                        receivers.append(sim)
                    values = bag.get(dport)
                    if values is None:
                        bag[dport] = [payload]
                    else:
                        values.append(payload)
            self._n_injected += len(self._injections)
            self._injections = []

        for sim in imminent:
            routes = sim.routes
            for port, out_values in sim.model.output(sim.state).items():
                route = routes[port]
                route.count += len(out_values)
                for dsim, dport in route.dests:
                    bag = dsim.bag
                    if not bag:
                        receivers.append(dsim)
                    values = bag.get(dport)
                    if values is None:
                        bag[dport] = list(out_values)
                    else:
                        values.extend(out_values)

        n_int = n_con = n_ext = 0
        dirty = set()
        for sim in imminent:
            model = sim.model
            if sim.bag:
                sim.state = model.delta_con(sim.state, sim.bag)
                sim.bag = {}
                n_con += 1
            else:
                sim.state = model.delta_int(sim.state)
                n_int += 1
            sim.t_last = t
            tn = sim.t_next = t + model.ta(sim.state)
            parent = sim.parent
            parent.child_tn[sim.index] = tn
            dirty.add(parent)
        for sim in receivers:
            if sim.bag:
                model = sim.model
                sim.state = model.delta_ext(sim.state, t - sim.t_last, sim.bag)
                sim.bag = {}
                n_ext += 1
                sim.t_last = t
                tn = sim.t_next = t + model.ta(sim.state)
                parent = sim.parent
                parent.child_tn[sim.index] = tn
                dirty.add(parent)

        while dirty:
            parents = set()
            for coord in dirty:
                tn = min(coord.child_tn)
                if tn != coord.t_next:
                    coord.t_next = tn
                    up = coord.parent
                    if up is not None:
                        up.child_tn[coord.index] = tn
                        parents.add(up)
            dirty = parents

        counts = self._counts
        counts[0] += n_int
        counts[1] += n_ext
        counts[2] += n_con
        counts[3] += len(imminent)
        self.clock = t
        return StepReport(t, len(imminent), n_int + n_ext + n_con)

    def run_to_completion(self, budget: int = DEFAULT_TRANSITION_BUDGET) -> SimulationStats:
        """Step until halted. ``budget`` caps the total number of transitions."""
        self._started = True
        counts = self._counts
        step = self.step
        while self.root.t_next != INFINITY or self._injections:
            step()
            if counts[0] + counts[1] + counts[2] > budget:
                raise RunawaySimulationError(
                    f"transition budget of {budget} exceeded at t={self.clock}"
                )
        return self.stats


def build_engine(model: CoupledModel) -> SimulationEngine:
    if not isinstance(model, CoupledModel):
        raise StructureError("the root of a simulation must be a coupled model")
    validate(model)
    return SimulationEngine(model)


def walk(model: Model) -> Iterable[Model]:
    """Pre-order traversal of a model tree."""
    stack = [model]
    while stack:
        m = stack.pop()
        yield m
        if isinstance(m, CoupledModel):
            stack.extend(reversed(m.components))


def root_inputs(model: CoupledModel) -> Sequence[Port]:
    return list(model.in_ports)
