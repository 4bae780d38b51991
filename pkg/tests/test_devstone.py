import math
import time

import pytest
from hypothesis import given, settings, strategies as st

import naive
from pydevstone import burn as burn_mod
from pydevstone.burn import burn, calibrate_burn
from pydevstone.devstone import (
    ACTIVE,
    PASSIVE,
    DevstoneAtomic,
    DevstoneConfig,
    DevstoneType,
    ExpectedCounts,
    build_devstone,
    expected_counts,
    observed_counts,
)
from pydevstone.kernel import CoupledModel, build_engine, walk
from pydevstone.verify import check_config, grid


def cfg(kind, d, w, **kw):
    return DevstoneConfig(DevstoneType.parse(kind), d, w, **kw)


def hmod_events_by_levels(d, w):
    """Events of HMOD counted level by level from the per-level term, outermost first."""
    total = 1
    for i in range(1, d):
        level = (1 + (i - 1) * (w - 1)) * (w - 1) * w / 2
        level += (w - 1) * (w + (i - 1) * (w - 1))
        total += level
    return int(total)


# ----------------------------------------------------------- expected_counts

@pytest.mark.parametrize(
    "kind, d, w, expected",
    [
        ("LI", 3, 4, (7, 9, 3, 0, 7)),
        ("HI", 2, 3, (3, 4, 2, 1, 4)),
        ("HO", 2, 3, (3, 5, 4, 1, 4)),
        ("HMOD", 2, 3, (6, 6, 2, 7, 10)),
        ("HO", 1, 5, (1, 1, 1, 0, 1)),
        ("LI", 1, 9, (1, 1, 1, 0, 1)),
    ],
)
def test_expected_counts_examples(kind, d, w, expected):
    assert expected_counts(cfg(kind, d, w)).as_tuple() == expected


def test_hi_balanced_events():
    # 1 + 199 * (199 * 200 / 2)
    assert expected_counts(cfg("HI", 200, 200)).n_events == 3_960_101
    assert expected_counts(cfg("HO", 200, 200)).n_events == 3_960_101
    assert expected_counts(cfg("LI", 200, 200)).n_events == 39_602


def test_hmod_sum_matches_level_enumeration():
    for d in range(1, 25):
        for w in range(1, 25):
            assert expected_counts(cfg("HMOD", d, w)).n_events == hmod_events_by_levels(d, w)


def test_expected_counts_ignore_delays():
    assert expected_counts(cfg("HI", 4, 5, int_delay=3, ext_delay=2)) == expected_counts(
        cfg("HI", 4, 5)
    )


def test_hmod_w1_degenerates():
    counts = expected_counts(cfg("HMOD", 5, 1))
    assert counts == ExpectedCounts(1, 5, 5, 0, 1)
    check = check_config(cfg("HMOD", 5, 1))
    assert check.ok, check.mismatches


# ------------------------------------------------------------------ config

@pytest.mark.parametrize("text", ["hmod", "HMod", "HOmod", "HMOD", " li "])
def test_type_aliases(text):
    DevstoneType.parse(text)


@pytest.mark.parametrize(
    "args",
    [("LI", 0, 3), ("LI", 3, 0), ("HI", 2.5, 3)],
)
def test_invalid_config(args):
    with pytest.raises(ValueError):
        cfg(*args)


def test_negative_delay_rejected():
    with pytest.raises(ValueError):
        cfg("LI", 2, 2, ext_delay=-1)
    with pytest.raises(ValueError):
        DevstoneType.parse("HX")


# ----------------------------------------------------------- build_devstone

def test_li_depth_one_is_the_leaf():
    model = build_devstone(cfg("LI", 1, 7))
    assert observed_counts(model) == {"n_atomic": 1, "n_eic": 1, "n_eoc": 1, "n_ic": 0}


def test_hmod_2_3_structure():
    model = build_devstone(cfg("HMOD", 2, 3))
    assert observed_counts(model) == {"n_atomic": 6, "n_eic": 6, "n_eoc": 2, "n_ic": 7}
    names = {a.name for a in model.components if isinstance(a, DevstoneAtomic)}
    assert names == {"A1_1", "A1_2", "A2_1", "A2_2", "A3_2"}
    eic_targets = {dst.owner.name for src, dst in model.eic if src is model.in_ports[1]}
    assert eic_targets == {"A1_1", "A1_2", "A2_1", "A3_2"}


def test_ho_2_3_structure():
    model = build_devstone(cfg("HO", 2, 3))
    assert observed_counts(model) == {"n_atomic": 3, "n_eic": 5, "n_eoc": 4, "n_ic": 1}
    assert len(model.in_ports) == 2 and len(model.out_ports) == 2
    # nothing above the root consumes out2; inside, level out2 is never coupled
    child = model.components[0]
    assert all(src is not child.out_ports[1] for src, _ in model.couplings())


def test_build_is_pure():
    def shape(model):
        out = []
        for m in walk(model):
            entry = (type(m).__name__, m.path, len(m.in_ports), len(m.out_ports))
            if isinstance(m, CoupledModel):
                entry += tuple(
                    (s.path, d.path) for s, d in list(m.eic) + list(m.eoc) + list(m.ic)
                )
            out.append(entry)
        return out

    for kind in DevstoneType:
        c = cfg(kind.value, 4, 4)
        assert shape(build_devstone(c)) == shape(build_devstone(c))


# ------------------------------------------------------ grid-wide properties

def test_structural_counts_on_grid():
    bad = [c for c in (check_config(x, structure_only=True) for x in grid()) if not c.ok]
    assert bad == []


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(["LI", "HI", "HO"]),
    st.integers(1, 10),
    st.integers(1, 10),
)
def test_events_match_formula(kind, d, w):
    model = build_devstone(cfg(kind, d, w))
    engine = build_engine(model)
    engine.inject(model.in_ports)
    stats = engine.run_to_completion()
    expected = expected_counts(cfg(kind, d, w))
    assert stats.n_lambda == expected.n_events
    if kind == "LI":
        assert expected.n_ic == 0
        assert stats.n_external == expected.n_atomic
        assert stats.n_confluent == 0
    if kind != "LI" and w <= 2:
        assert expected.n_ic == 0


def test_hi_and_ho_share_event_counts():
    for d in range(1, 8):
        for w in range(1, 8):
            assert (
                check_config(cfg("HI", d, w)).observed["n_events"]
                == check_config(cfg("HO", d, w)).observed["n_events"]
            )


@pytest.mark.parametrize("d, w", [(2, 2), (2, 3), (3, 3), (3, 5), (4, 2), (5, 4)])
def test_ho_discards_match_brute_force(d, w):
    model = build_devstone(cfg("HO", d, w))
    engine = build_engine(model)
    engine.inject(model.in_ports)
    stats = engine.run_to_completion()
    reference = naive.simulate(build_devstone(cfg("HO", d, w)))
    assert stats.n_messages_discarded == reference["discarded"]
    assert stats.n_messages_discarded > 0
    # one drop per non-leaf firing (level out2), the leaf output at the
    # root's out1 and the in2 injection copy that dies at the leaf
    assert stats.n_messages_discarded == stats.n_lambda + 1


# ------------------------------------------------------- atomic behaviour

def test_transition_functions():
    a = DevstoneAtomic("a")
    assert a.ta(a.initial_state) == math.inf
    assert a.delta_ext(PASSIVE, 0.0, {a.i_in: [0]}) == ACTIVE
    assert a.delta_ext(ACTIVE, 0.0, {a.i_in: [0, 0]}) == ACTIVE
    assert a.delta_int(ACTIVE) == PASSIVE
    assert a.delta_con(ACTIVE, {a.i_in: [0]}) == ACTIVE
    assert a.ta(ACTIVE) == 0
    assert a.ta(PASSIVE) == math.inf
    assert ACTIVE.phase == "active" and PASSIVE.phase == "passive"


def test_lambda_emits_one_message_regardless_of_bag():
    a = DevstoneAtomic("a")
    out = a.output(ACTIVE)
    assert list(out) == [a.o_out]
    assert list(out[a.o_out]) == [0]

    top = CoupledModel("top")
    for _ in range(5):
        top.add_in_port()
    top.add_out_port()
    top.add_component(a)
    for p in top.in_ports:
        top.connect(p, a.i_in)
    top.connect(a.o_out, top.out_ports[0])
    engine = build_engine(top)
    engine.inject(top.in_ports)
    stats = engine.run_to_completion()
    assert stats.n_messages_delivered == 5
    assert stats.n_external == 1
    assert stats.n_lambda == 1
    assert stats.n_messages_emitted == 1


def test_zero_delays_never_touch_the_clock(monkeypatch):
    def boom():
        raise AssertionError("clock read for a zero delay")

    monkeypatch.setattr(burn_mod.time, "perf_counter", boom)
    assert burn(0) == 0
    a = DevstoneAtomic("a")
    a.delta_con(ACTIVE, {a.i_in: [0]})


def test_calibration_is_positive_and_cached():
    rate = calibrate_burn()
    assert rate > 0 and math.isfinite(rate)
    assert calibrate_burn() is rate


def _timed(fn):
    start = time.perf_counter()
    fn()
    return (time.perf_counter() - start) * 1e3


def test_burn_10ms_in_window():
    calibrate_burn()
    elapsed = _timed(lambda: burn(10))
    assert 8.0 <= elapsed <= 20.0


def test_ext_delay_burns():
    calibrate_burn()
    a = DevstoneAtomic("a", ext_delay=5)
    assert _timed(lambda: a.delta_ext(PASSIVE, 0.0, {a.i_in: [0]})) >= 4.0


def test_confluent_burns_both_delays():
    calibrate_burn()
    a = DevstoneAtomic("a", int_delay=1, ext_delay=2)
    elapsed = _timed(lambda: a.delta_con(ACTIVE, {a.i_in: [0]}))
    assert 2.4 <= elapsed <= 30.0
