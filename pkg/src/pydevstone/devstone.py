"""DEVStone model generator.

Four topologies are supported (LI, HI, HO and HMOD). A model is a recursion
of ``depth`` coupled levels; the innermost level holds a single atomic whose
first input feeds the atomic and whose output feeds the first output port.
:func:`expected_counts` gives the closed-form number of atomics, couplings
and events for any configuration, and :func:`observed_counts` measures the
same quantities by walking a built tree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .burn import burn
from .kernel import INFINITY, AtomicModel, CoupledModel, walk


class DevstoneType(enum.Enum):
    LI = "LI"
    HI = "HI"
    HO = "HO"
    HMOD = "HMOD"

    @classmethod
    def parse(cls, text: str) -> DevstoneType:
        key = text.strip().upper()
        if key == "HOMOD":
            key = "HMOD"
        try:
            return cls[key]
        except KeyError:
            raise ValueError(
                f"unknown DEVStone type {text!r} (expected LI, HI, HO or HMOD)"
            ) from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DevstoneConfig:
    type: DevstoneType
    depth: int
    width: int
    int_delay: float = 0.0
    ext_delay: float = 0.0

    def __post_init__(self):
        if not isinstance(self.type, DevstoneType):
            object.__setattr__(self, "type", DevstoneType.parse(str(self.type)))
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValueError(f"depth must be an integer >= 1, got {self.depth!r}")
        if int(self.width) != self.width or self.width < 1:
            raise ValueError(f"width must be an integer >= 1, got {self.width!r}")
        if self.int_delay < 0 or self.ext_delay < 0:
            raise ValueError("transition delays must be non-negative")

    @property
    def label(self) -> str:
        return f"{self.type} {self.depth}-{self.width}"


@dataclass(frozen=True)
class ExpectedCounts:
    n_atomic: int
    n_eic: int
    n_eoc: int
    n_ic: int
    n_events: int

    def as_tuple(self) -> tuple:
        return (self.n_atomic, self.n_eic, self.n_eoc, self.n_ic, self.n_events)


def expected_counts(config: DevstoneConfig) -> ExpectedCounts:
    d, w = config.depth, config.width
    kind = config.type
    if kind is DevstoneType.HMOD:
        tri = (w - 1) * w // 2
        events = 1
        for i in range(1, d):
            events += (1 + (i - 1) * (w - 1)) * tri + (w - 1) * (w + (i - 1) * (w - 1))
        return ExpectedCounts(
            n_atomic=(w - 1 + tri) * (d - 1) + 1,
            n_eic=(2 * (w - 1) + 1) * (d - 1) + 1,
            n_eoc=d,
            n_ic=((w - 1) ** 2 + tri) * (d - 1),
            n_events=events,
        )

    n_atomic = (w - 1) * (d - 1) + 1
    if kind is DevstoneType.LI:
        return ExpectedCounts(n_atomic, w * (d - 1) + 1, d, 0, n_atomic)

    n_ic = (w - 2) * (d - 1) if w > 2 else 0
    n_events = 1 + (d - 1) * (w - 1) * w // 2
    if kind is DevstoneType.HI:
        return ExpectedCounts(n_atomic, w * (d - 1) + 1, d, n_ic, n_events)
    return ExpectedCounts(n_atomic, (w + 1) * (d - 1) + 1, w * (d - 1) + 1, n_ic, n_events)


@dataclass(frozen=True)
class DevstoneState:
    phase: str
    sigma: float


PASSIVE = DevstoneState("passive", INFINITY)
ACTIVE = DevstoneState("active", 0.0)


class DevstoneAtomic(AtomicModel):
    """One input, one output; re-arms on every input and emits a single 0."""

    initial_state = PASSIVE

    def __init__(self, name: str, int_delay: float = 0.0, ext_delay: float = 0.0):
        super().__init__(name)
        self.i_in = self.add_in_port("in")
        self.o_out = self.add_out_port("out")
        self.int_delay = int_delay
        self.ext_delay = ext_delay
        self._output = {self.o_out: (0,)}

    def delta_int(self, state):
        if self.int_delay:
            burn(self.int_delay)
        return PASSIVE

    def delta_ext(self, state, elapsed, bag):
        if self.ext_delay:
            burn(self.ext_delay)
        return ACTIVE

    def delta_con(self, state, bag):
        return self.delta_ext(self.delta_int(state), 0.0, bag)

    def output(self, state):
        return self._output

    def ta(self, state):
        return state.sigma


class _Builder:
    def __init__(self, config: DevstoneConfig):
        self.config = config
        self.n_inputs = 1 if config.type in (DevstoneType.LI, DevstoneType.HI) else 2
        self.n_outputs = 2 if config.type is DevstoneType.HO else 1

    def atomic(self, name: str) -> DevstoneAtomic:
        return DevstoneAtomic(name, self.config.int_delay, self.config.ext_delay)

    def _shell(self, level: int) -> CoupledModel:
        coupled = CoupledModel(f"L{level}")
        for _ in range(self.n_inputs):
            coupled.add_in_port()
        for _ in range(self.n_outputs):
            coupled.add_out_port()
        return coupled

    def build(self) -> CoupledModel:
        depth = self.config.depth
        model = self._shell(depth)
        leaf = model.add_component(self.atomic("A"))
        model.connect(model.in_ports[0], leaf.i_in)
        model.connect(leaf.o_out, model.out_ports[0])
        wire = getattr(self, "wire_" + self.config.type.name.lower())
        # innermost first, so arbitrarily deep models need no recursion
        for level in range(depth - 1, 0, -1):
            coupled = self._shell(level)
            coupled.add_component(model)
            wire(coupled, model)
            model = coupled
        return model

    def _row(self, coupled: CoupledModel):
        return [
            coupled.add_component(self.atomic(f"A{k}")) for k in range(1, self.config.width)
        ]

    def wire_li(self, coupled, child, chain=False):
        atomics = self._row(coupled)
        coupled.connect(coupled.in_ports[0], child.in_ports[0])
        for a in atomics:
            coupled.connect(coupled.in_ports[0], a.i_in)
        coupled.connect(child.out_ports[0], coupled.out_ports[0])
        if chain:
            for a, b in zip(atomics, atomics[1:]):
                coupled.connect(a.o_out, b.i_in)

    def wire_hi(self, coupled, child):
        self.wire_li(coupled, child, chain=True)

    def wire_ho(self, coupled, child):
        in1, in2 = coupled.in_ports
        out1, out2 = coupled.out_ports
        atomics = self._row(coupled)
        coupled.connect(in1, child.in_ports[0])
        coupled.connect(in2, child.in_ports[1])
        for a in atomics:
            coupled.connect(in2, a.i_in)
        coupled.connect(child.out_ports[0], out1)
        for a in atomics:
            coupled.connect(a.o_out, out2)
        for a, b in zip(atomics, atomics[1:]):
            coupled.connect(a.o_out, b.i_in)

    def wire_hmod(self, coupled, child):
        w = self.config.width
        in1, in2 = coupled.in_ports
        # grid[r][c] for rows 1..w, columns 1..w-1; row 1 is full, rows >= 2
        # hold columns r-1..w-1
        grid = {}
        for r in range(1, w + 1):
            first = 1 if r == 1 else r - 1
            for c in range(first, w):
                grid[r, c] = coupled.add_component(self.atomic(f"A{r}_{c}"))
        row1 = [grid[1, c] for c in range(1, w)]

        coupled.connect(in1, child.in_ports[0])
        for a in row1:
            coupled.connect(in2, a.i_in)
        for r in range(2, w + 1):
            coupled.connect(in2, grid[r, r - 1].i_in)

        for a in row1:
            coupled.connect(a.o_out, child.in_ports[1])
        for c in range(1, w):
            for a in row1:
                coupled.connect(grid[2, c].o_out, a.i_in)
        for r in range(3, w + 1):
            for c in range(r - 1, w):
                coupled.connect(grid[r, c].o_out, grid[r - 1, c].i_in)
        coupled.connect(child.out_ports[0], coupled.out_ports[0])


def build_devstone(config: DevstoneConfig) -> CoupledModel:
    """Build the root coupled model for ``config``."""
    return _Builder(config).build()


def observed_counts(model: CoupledModel) -> dict:
    """Atomics and couplings found by walking ``model`` (no events)."""
    n_atomic = n_eic = n_eoc = n_ic = 0
    for m in walk(model):
        if isinstance(m, CoupledModel):
            n_eic += len(m.eic)
            n_eoc += len(m.eoc)
            n_ic += len(m.ic)
        else:
            n_atomic += 1
    return {"n_atomic": n_atomic, "n_eic": n_eic, "n_eoc": n_eoc, "n_ic": n_ic}
