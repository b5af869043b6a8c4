import json
import time

import pytest

from awn import models
from awn.cterms import cterms
from awn.semantics import (TAU, NetPar, NodeState, ProcState, ReceiveA, SubnetState, closed,
                           net_tree_ips, node, pnet, wf_net_tree)
from awn.syntax import Addr, DataState, Msg
from awn.verify import (Budget, Trace, check_invariant, check_step_invariant, default, digest,
                        explore, first_component, stray_start_terms, netlift, obligations, onl,
                        onll, replay)

A1, A2 = Addr(1), Addr(2)
PKT12 = (Msg("pkt", (1, A2)),)


def one_pkt():
    return models.ptoy(1, PKT12)


# -- explore -------------------------------------------------------------------

def test_explore_single_message_universe():
    ex = explore(one_pkt())
    assert ex.complete and not ex.stuck
    # receive, nhid:=id, match, guard, no:=num, nhid:=sid, broadcast, clear -> back at 0
    # then a second round with no=1 goes through the num <= no branch
    assert len(ex.states) == 15
    assert len(ex.edges()) == ex.n_transitions


def test_false_filter_keeps_only_init():
    A = one_pkt()
    ex = explore(A, I=lambda a: False)
    assert ex.states == set(A.init) and ex.complete and ex.edges() == set()


def test_linear_net_single_injection_terminates():
    net = pnet(models.toy_node_proc(), models.LINEAR3)
    A = closed(net, [(A1, 1, Addr(3))])
    ex = explore(A, budget=Budget(max_newpkts=1))
    assert ex.complete and len(ex.states) > 1


def test_budget_exhaustion_is_flagged():
    ex = explore(models.ptoy(1), budget=Budget(max_states=10))
    assert not ex.complete and len(ex.states) == 10
    ex = explore(models.ptoy(1), budget=Budget(max_depth=2))
    assert not ex.complete and len(ex.levels) == 3


def test_wall_clock_budget():
    A = models.toy_net(models.LINEAR3, dsts=[3])
    t0 = time.perf_counter()
    ex = explore(A, budget=Budget(max_newpkts=2, max_seconds=0.5), keep_transitions=False)
    assert not ex.complete and time.perf_counter() - t0 < 5
    assert explore(one_pkt(), budget=Budget(max_seconds=60)).complete


@pytest.mark.parametrize("small, big", [(5, 40), (40, 400), (400, 4000)])
def test_explore_monotone_in_budget(small, big):
    A = models.ptoy(2)
    a = explore(A, budget=Budget(max_states=small))
    b = explore(A, budget=Budget(max_states=big))
    assert a.states <= b.states
    a = explore(A, budget=Budget(max_depth=small // 5))
    b = explore(A, budget=Budget(max_depth=big // 5))
    assert a.states <= b.states and a.edges() <= b.edges()


def test_newpkt_bound_is_monotone():
    A = models.toy_net(models.PAIR2, dsts=[2])
    sizes = [len(explore(A, budget=Budget(max_newpkts=k), keep_transitions=False).parent)
             for k in (0, 1, 2)]
    assert sizes[0] == 1 and sizes[0] < sizes[1] < sizes[2]


def test_jobs_do_not_change_results():
    A = models.ptoy(1)
    one = explore(A, jobs=1)
    four = explore(A, jobs=4)
    assert one.states == four.states and one.edges() == four.edges()
    assert one.levels == four.levels


def test_lean_agrees_with_full():
    A = models.toy_net(models.PAIR2, dsts=[2])
    full = explore(A, budget=Budget(max_newpkts=1))
    lean = explore(A, budget=Budget(max_newpkts=1), keep_transitions=False, lean=True)
    assert full.parent.keys() == lean.parent.keys()
    assert full.n_transitions == lean.n_transitions


def test_start_terms_stay_within_control_terms(toy, qspec):
    assert stray_start_terms(toy, explore(models.ptoy(1)).states) == []
    q = models.qmsg([Msg("pkt", (0, A1)), Msg("pkt", (1, A1))])
    assert stray_start_terms(qspec, explore(q, budget=Budget(max_depth=6)).states) == []


# -- invariants ------------------------------------------------------------------

@pytest.mark.parametrize("i", [1, 2])
def test_nhid_and_num_invariants_hold(toy, i):
    A = models.ptoy(i)
    assert check_invariant(A, models.inv1(toy)).holds
    assert check_invariant(A, models.inv4(toy)).holds


def test_true_predicate_holds():
    v = check_invariant(one_pkt(), lambda s: True)
    assert v.holds and v.complete and v.states == 15 and v.trace is None


def test_no_is_zero_violated_after_update():
    A = one_pkt()
    v = check_invariant(A, models.no_is_zero)
    assert v.status == "violated"
    assert replay(A, v.trace)
    *_, (a, last) = v.trace.steps
    assert a == TAU and last.xi["no"] == 1
    assert all(t.xi["no"] == 0 for t in v.trace.states()[:-1])
    # the prefix just taken was no := num
    before = v.trace.states()[-2]
    assert str(before.p.assigns[0][1]) == "num"


def test_minimal_depth_trace():
    A = one_pkt()
    v = check_invariant(A, models.no_is_zero)
    ex = explore(A)
    depth = next(d for d in range(len(ex.levels))
                 if any(s.xi["no"] != 0 for s in _level(ex, d)))
    assert len(v.trace) == depth


def _level(ex, d):
    keys = [k for k in ex.parent if _depth(ex, k) == d]
    return [k[0] for k in keys]


def _depth(ex, k):
    n = 0
    while ex.parent[k] is not None:
        k = ex.parent[k][0]
        n += 1
    return n


def test_predicate_error_is_distinct():
    v = check_invariant(one_pkt(), lambda s: s.xi["nope"])
    assert v.status == "error" and "nope" in v.error


def test_no_monotone_and_reflexive_step_invariants():
    A = models.ptoy(1)
    assert check_step_invariant(A, models.inv2).holds
    assert check_step_invariant(A, lambda s, a, t: a != TAU or s != t or s == t).holds


def test_strict_increase_fails_on_receive():
    A = one_pkt()
    v = check_step_invariant(A, lambda s, a, t: s.xi["no"] < t.xi["no"])
    assert v.status == "violated" and len(v.trace) == 1
    assert isinstance(v.trace.steps[0][0], ReceiveA)
    assert replay(A, v.trace)


def test_mutant_lets_no_decrease_with_replayable_trace():
    spec = models.mutated_toy_spec()
    A = models.ptoy(1, spec=spec)
    v = check_step_invariant(A, models.inv2)
    assert v.status == "violated"
    assert replay(A, v.trace)
    s, t = v.trace.states()[-2:]
    assert s.xi["no"] > t.xi["no"]


def test_replay_rejects_tampered_traces():
    A = one_pkt()
    v = check_invariant(A, models.no_is_zero)
    bad = Trace(v.trace.init, list(v.trace.steps))
    a, t = bad.steps[-1]
    bad.steps[-1] = (a, t._replace(xi=DataState({**t.xi, "no": 7})))
    assert not replay(A, bad)
    assert not replay(A, Trace(bad.steps[0][1], []))


def test_trace_records_format():
    v = check_invariant(one_pkt(), models.no_is_zero)
    lines = v.trace.jsonl().splitlines()
    assert len(lines) == len(v.trace) + 1
    first = json.loads(lines[0])
    assert list(first) == ["step", "action", "state"] and first["action"] == "init"
    assert [json.loads(x)["step"] for x in lines] == list(range(len(lines)))
    ds = v.trace.digests()
    assert all(ds[k][2] == ds[k + 1][0] for k in range(len(ds) - 1))
    summary = v.summary()
    assert summary["status"] == "violated" and summary["trace_length"] == len(v.trace)
    json.dumps(summary)


def test_digest_is_stable():
    s = models.ptoy(1).init[0]
    assert digest(s) == digest(models.ptoy(1).init[0])
    assert len(digest(s)) == 16


# -- label wrappers -----------------------------------------------------------

def test_onl_on_choice_sees_shared_label(toy):
    body = toy["PToy"]
    choice = body.cont.cont
    seen = []
    onl(toy, lambda xi, l: seen.append(l.index) or True)(ProcState(models.toy_init(1), choice))
    assert seen == [2]


def test_onll_quantifies_both_ends(toy):
    A = one_pkt()
    seen = set()
    P = onll(toy, lambda a, act, b: seen.add((a[1].index, b[1].index)) or True)
    check_step_invariant(A, P)
    assert (0, 1) in seen and (1, 2) in seen


# -- obligations ----------------------------------------------------------------

def test_fourteen_obligations_for_nhid_invariant(toy):
    A = models.ptoy(1)
    P = models.inv1(toy)
    obs, _ = obligations(toy, A, P)
    trans = [o for o in obs if o.kind == "trans"]
    assert len(trans) == 14 and {o.cterm for o in trans} == cterms(toy)
    assert obs[0].kind == "init" and obs[0].status == "holds"
    conj = all(o.status != "violated" for o in obs)
    assert conj == check_invariant(A, P).holds


def test_obligations_detect_violation(toy):
    A = one_pkt()
    obs, _ = obligations(toy, A, models.no_is_zero)
    violated = [o for o in obs if o.status == "violated"]
    assert len(violated) == 1
    assert violated[0].cterm.label.index == 7
    assert replay(A, violated[0].trace)
    assert check_invariant(A, models.no_is_zero).status == "violated"


def test_empty_budget_leaves_obligations_uncovered(toy):
    obs, _ = obligations(toy, models.ptoy(1), models.inv1(toy), budget=Budget(max_depth=0))
    assert obs[0].status == "holds"
    assert all(o.status == "uncovered" for o in obs[1:])


def test_qmsg_obligations_all_hold(qspec):
    msgs = (Msg("pkt", (0, A1)), Msg("pkt", (1, A1)))
    Q = models.qmsg(msgs)
    P = lambda s: set(s.xi["msgs"]) <= set(msgs)
    obs, _ = obligations(qspec, Q, P, budget=Budget(max_depth=8))
    trans = [o for o in obs if o.kind == "trans"]
    assert len(trans) == 6 and all(o.status == "holds" for o in trans)


# -- global states ------------------------------------------------------------------

def test_net_tree_addresses():
    assert net_tree_ips(models.LINEAR3) == {A1, A2, Addr(3)}
    assert not wf_net_tree(NetPar(node(1), node(1)))
    assert wf_net_tree(models.LINEAR3)


def test_netlift_leaf_and_duplicates():
    A = models.toy_net(models.PAIR2)
    (s,) = A.init
    lifted = netlift(first_component, s)
    assert lifted == {A1: models.toy_init(1), A2: models.toy_init(2)}
    assert netlift(first_component, s.left) == {A1: models.toy_init(1)}
    with pytest.raises(ValueError):
        netlift(first_component, SubnetState(s.left, s.left))


def test_default_fills_missing_addresses():
    m = default(models.toy_init, {})
    assert m[Addr(7)]["no"] == 0 and m[Addr(7)]["nhid"] == Addr(7)
    assert len(m) == 0


def test_next_hop_on_initial_net_state():
    (s,) = models.toy_net(models.LINEAR3).init
    assert models.inv3()(s)


def test_next_hop_detects_a_bad_global_state():
    (s,) = models.toy_net(models.PAIR2).init
    left = s.left
    xi, q = left.inner
    bad_xi = DataState({**xi.xi, "no": 2, "nhid": A2})
    bad = s._replace(left=NodeState(A1, (xi._replace(xi=bad_xi), q), left.R))
    assert not models.inv3()(bad)


def test_next_hop_small_net_check():
    A = models.toy_net(models.PAIR2, data=(1,), dsts=[2])
    v = check_invariant(A, models.inv3(), budget=Budget(max_newpkts=1))
    assert v.holds and v.complete


def _forget_dst(j):
    """JSON state with the destination field of every newpkt blanked."""
    if isinstance(j, dict):
        if j.get("msg") == "newpkt":
            return {"msg": "newpkt", "args": [j["args"][0], None]}
        return {k: _forget_dst(v) for k, v in j.items()}
    if isinstance(j, list):
        return [_forget_dst(v) for v in j]
    return j


def test_newpkt_destination_is_never_read():
    # reachable states with every destination project onto those with one fixed
    from awn.semantics import state_to_json
    b = Budget(max_newpkts=1)
    every = explore(models.toy_net(models.PAIR2), budget=b, keep_transitions=False)
    fixed = explore(models.toy_net(models.PAIR2, dsts=[2]), budget=b, keep_transitions=False)
    proj = lambda ex: {json.dumps(_forget_dst(state_to_json(s)), sort_keys=True) for s in ex.states}
    assert every.complete and fixed.complete
    assert len(every.states) > len(fixed.states)
    assert proj(every) == proj(fixed)
    # and the verdicts agree
    assert (check_invariant(models.toy_net(models.PAIR2), models.inv3(), budget=b).status
            == check_invariant(models.toy_net(models.PAIR2, dsts=[2]), models.inv3(), budget=b).status
            == "holds")
