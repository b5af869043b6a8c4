import pytest
from hypothesis import given, strategies as st

from awn.models import load_fixture
from awn.syntax import (UNDEF, Addr, Call, CallCycle, Choice, DataState, EvalError, Label, Msg,
                        ParseError, eval_expr, label_spec, labels, parse_expr, parse_spec,
                        show_spec, simple_labels, strip_labels)
from awn.syntax.expr import Choose, Filter, MatchBind, apply_guard, run_assigns
from awn.syntax.terms import iter_prefixes

MSGS = {"pkt": ("int", "ip"), "newpkt": ("int", "ip")}


def prefix_labels(spec, pn):
    """Label indices of the prefixes of a body in source order."""
    return [q.label.index for q in iter_prefixes(spec[pn])]


def test_toy_label_map(toy):
    # receive, nhid:=id, then the newpkt branch 2..5 and the pkt branch 2,6..11
    assert prefix_labels(toy, "PToy") == [0, 1, 2, 3, 4, 5, 2, 6, 7, 8, 9, 10, 6, 11]


def test_qmsg_label_map(qspec):
    assert prefix_labels(qspec, "Qmsg") == [0, 0, 1, 2, 2, 1]


def test_choice_branches_share_label(toy):
    body = toy["PToy"]
    choice = body.cont.cont
    assert isinstance(choice, Choice)
    assert labels(toy, choice) == {Label("PToy", 2)}


def test_calls_take_labels_of_the_body(toy):
    assert labels(toy, Call("PToy")) == {Label("PToy", 0)}


def test_simple_labels(toy, qspec):
    assert simple_labels(toy) and simple_labels(qspec)


@pytest.mark.parametrize("name", ["toy", "qmsg"])
def test_pretty_round_trip(name):
    spec = label_spec(parse_spec(load_fixture(name), name))
    again = label_spec(parse_spec(show_spec(spec), name))
    assert again == spec
    assert show_spec(again) == show_spec(spec)


def test_strip_then_relabel_is_identity(toy):
    for pn, body in toy.procs.items():
        from awn.syntax.terms import labelled
        assert labelled(pn, strip_labels(body)) == body


def test_toy_variables_and_messages(toy):
    assert [d.name for d in toy.variables] == ["msg", "num", "sid", "no", "id", "nhid"]
    assert toy.messages == MSGS


@pytest.mark.parametrize("src, fragment", [
    ("proc P() = call(Q)", "unknown process"),
    ("proc P() = call(P)\nproc P() = call(P)", "duplicate"),
    ("proc P(m: msg) = broadcast(foo(1)) . call(P)", "foo"),
    ("message pkt(int)\nproc P() = broadcast(pkt(1, 2)) . call(P)", "pkt"),
    ("proc P() = [[ x := ]] . call(P)", ""),
    ("proc P() = receive(m) call(P)", ""),
])
def test_parse_errors(src, fragment):
    with pytest.raises(ParseError) as exc:
        parse_spec(src)
    assert fragment in str(exc.value)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_spec("proc P() =\n   [[ x := ]] . call(P)")
    assert exc.value.line == 2


def test_guard_gt_is_operator_inside_brackets():
    spec = parse_spec("proc P(a: int = 1, b: int = 0) = < a > b > . call(P)")
    g = spec["P"].guard
    assert isinstance(g, Filter) and str(g.cond) == "(a > b)"


# -- expressions ---------------------------------------------------------------

ENV = DataState({"x": 3, "y": 4, "q": (Msg("pkt", (1, Addr(2))),), "e": (), "u": UNDEF,
                 "a": Addr(1), "b": True})


@pytest.mark.parametrize("text, value", [
    ("max(x, y)", 4),
    ("x + y - 1", 6),
    ("x < y and b", True),
    ("hd(q)", Msg("pkt", (1, Addr(2)))),
    ("tl(q)", ()),
    ("q ++ [pkt(2, @3)]", (Msg("pkt", (1, Addr(2))), Msg("pkt", (2, Addr(3))))),
    ("e = []", True),
    ("a = @1", True),
    ("if x > y then x else y", 4),
    ("not b", False),
])
def test_eval(text, value):
    assert eval_expr(parse_expr(text, MSGS), ENV) == value


@pytest.mark.parametrize("text", ["hd(e)", "u < 1", "x + a", "zz", "x = u", "b + 1"])
def test_eval_errors(text):
    with pytest.raises(EvalError):
        eval_expr(parse_expr(text, MSGS), ENV)


def test_int_and_address_never_equal():
    assert eval_expr(parse_expr("@1 = 1"), {}) is False


def test_assignments_are_sequential():
    out = run_assigns([("x", parse_expr("x + 1")), ("y", parse_expr("x"))], ENV)
    assert (out["x"], out["y"]) == (4, 4)
    assert ENV["x"] == 3


def test_guards():
    xi = DataState({"m": Msg("pkt", (5, Addr(2))), "n": UNDEF, "k": 0})
    bind = MatchBind("m", "pkt", ("d", "s"), (("n", parse_expr("d")),))
    assert [s["n"] for s in apply_guard(bind, xi)] == [5]
    assert apply_guard(MatchBind("m", "newpkt", ("d", "s"), ()), xi) == []
    with pytest.raises(EvalError):
        apply_guard(MatchBind("n", "pkt", ("d", "s"), ()), xi)
    assert [s["k"] for s in apply_guard(Choose("k", parse_expr("1"), parse_expr("3")), xi)] == [1, 2, 3]
    assert apply_guard(Filter(parse_expr("k > 0")), xi) == []


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_max_min_agree_with_python(a, b):
    env = {"a": a, "b": b}
    assert eval_expr(parse_expr("max(a, b)"), env) == max(a, b)
    assert eval_expr(parse_expr("min(a, b)"), env) == min(a, b)


def test_data_state_equality_ignores_order():
    assert DataState({"a": 1, "b": 2}) == DataState({"b": 2, "a": 1})
    assert hash(DataState({"a": 1, "b": 2})) == hash(DataState({"b": 2, "a": 1}))


def test_labels_detects_unguarded_cycle():
    spec = label_spec(parse_spec("proc P() = call(Q)\nproc Q() = call(P)"))
    with pytest.raises(CallCycle):
        labels(spec, spec["P"])
