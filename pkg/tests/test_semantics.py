import pytest

from awn import models
from awn.semantics import (TAU, Arrive, BroadcastA, Connect, Disconnect, NetPar,
                           NewPkt, NodeDeliver, NodeState, NotUnicast, ProcState, ReceiveA,
                           SendA, StarCast, Step, SubnetState, UnicastA, closed, init_state,
                           mk_node, mk_par, mk_seqp, net_ips, net_tree_ips, node, node_trans,
                           par_steps, pnet, seqp_steps, wf_net_tree)
from awn.syntax import UNDEF, Addr, DataState, Msg, label_spec, parse_spec
from awn.syntax.terms import labels
from awn.verify import Budget, explore

A1, A2, A3 = Addr(1), Addr(2), Addr(3)


def at_label(spec, s):
    (lab,) = labels(spec, s.p)
    return lab.index


def toy_state_at(toy, index, **xi):
    """The toy process at the first prefix carrying ``index`` with the given data."""
    from awn.syntax.terms import iter_prefixes
    p = next(q for q in iter_prefixes(toy["PToy"]) if q.label.index == index)
    base = dict(models.toy_init(1))
    base.update(xi)
    return ProcState(DataState(base), p)


# -- sequential processes ---------------------------------------------------

def test_initial_receive_step(toy):
    s = mk_seqp(toy, 1).init[0]
    steps = seqp_steps(toy, s, [Msg("newpkt", (1, Addr(9)))])
    assert len(steps) == 1
    (a, t), = steps
    assert a == ReceiveA(Msg("newpkt", (1, Addr(9))))
    assert at_label(toy, t) == 1
    assert t.xi["msg"] == Msg("newpkt", (1, Addr(9)))


def test_assignment_is_tau(toy):
    s = toy_state_at(toy, 1, nhid=A2)
    (a, t), = seqp_steps(toy, s)
    assert a == TAU and t.xi["nhid"] == A1 and at_label(toy, t) == 2


def test_guard_with_empty_result_blocks(toy):
    # at label 6 with num <= no only the second branch moves
    choice = toy["PToy"].cont.cont.right.cont
    base = dict(models.toy_init(1), num=1, no=2, msg=Msg("pkt", (1, A2)), sid=A2)
    steps = seqp_steps(toy, ProcState(DataState(base), choice))
    assert len(steps) == 1
    assert at_label(toy, steps[0].target) == 11


def test_unicast_offers_both_outcomes():
    spec = label_spec(parse_spec(
        "message m(int)\nproc P(x: int = 0) = unicast(@2, m(x)) . [[ x := 1 ]] . call(P) |> [[ x := 2 ]] . call(P)"))
    s = mk_seqp(spec).init[0]
    acts = [a for a, _ in seqp_steps(spec, s)]
    assert acts == [UnicastA(A2, Msg("m", (0,))), NotUnicast(A2)]


def test_initial_state_binds_self(toy):
    xi = init_state(toy, Addr(5))
    assert (xi["id"], xi["nhid"], xi["no"]) == (Addr(5), Addr(5), 0)
    assert xi["msg"] is UNDEF and xi["num"] is UNDEF and xi["sid"] is UNDEF


def test_steps_are_deterministic(toy):
    A = models.ptoy(1)
    for s in explore(A, budget=Budget(max_states=300)).states:
        assert A.steps(s) == A.steps(s)


# -- parallel composition -----------------------------------------------------

def test_receive_synchronises_with_queue_send(toy):
    m = Msg("pkt", (1, A2))
    A, Q = mk_seqp(toy, 1), models.qmsg()
    q0 = ProcState(DataState({"msgs": (m,)}), models.qmsg_spec()["Qmsg"])
    # the queue first passes its non-empty guard on its own
    (a, q), = [st for st in Q.trans(q0)]
    assert a == TAU
    steps = par_steps(A.init[0], q, A, Q)
    taus = [t for a, t in steps if a == TAU]
    assert len(taus) == 1
    left, right = taus[0]
    assert left.xi["msg"] == m
    # the queue still holds m until it runs tl
    assert right.xi["msgs"] == (m,)
    assert not any(isinstance(a, (SendA, ReceiveA)) for a, _ in steps)


def test_broadcast_interleaves_left(toy):
    A, Q = mk_seqp(toy, 1), models.qmsg()
    s = toy_state_at(toy, 4, no=1)
    q = Q.init[0]
    steps = par_steps(s, q, A, Q)
    assert steps == [Step(BroadcastA(Msg("pkt", (1, A1))), (steps[0].target[0], q))]


def test_no_partner_no_sync(toy):
    A, Q = mk_seqp(toy, 1), models.qmsg()
    assert par_steps(A.init[0], Q.init[0], A, Q) == []


def test_pair_receives_through_the_queue(toy):
    P = mk_par(mk_seqp(toy, 1), models.qmsg())
    m = Msg("newpkt", (1, A1))
    succ = P.receive(P.init[0], m)
    assert len(succ) == 1 and succ[0][1].xi["msgs"] == (m,)


# -- nodes -------------------------------------------------------------------

def proc_with(src):
    spec = label_spec(parse_spec("message m(int)\n" + src))
    return spec, mk_seqp(spec, 1)


def test_node_broadcast_becomes_cast():
    spec, A = proc_with("proc P() = broadcast(m(1)) . call(P)")
    n = NodeState(A1, A.init[0], frozenset({A2}))
    (a, _), = node_trans(n, A, ())
    assert a == StarCast(frozenset({A2}), Msg("m", (1,)))


def test_node_groupcast_intersects_range():
    _, A = proc_with("proc P() = groupcast([@2, @3], m(1)) . call(P)")
    (a, _), = node_trans(NodeState(A1, A.init[0], frozenset({A2, Addr(4)})), A, ())
    assert a == StarCast(frozenset({A2}), Msg("m", (1,)))


def test_node_failed_unicast_is_tau():
    spec, A = proc_with("proc P(x: int = 0) = unicast(@3, m(1)) . call(P) |> [[ x := 1 ]] . call(P)")
    n = NodeState(A1, A.init[0], frozenset())
    (a, t), = node_trans(n, A, ())
    assert a == TAU and t.inner.xi["x"] == 0
    n2 = NodeState(A1, A.init[0], frozenset({A3}))
    (a2, _), = node_trans(n2, A, ())
    assert a2 == StarCast(frozenset({A3}), Msg("m", (1,)))


def test_node_deliver_and_send():
    _, A = proc_with("proc P() = deliver(7) . call(P)")
    (a, _), = node_trans(NodeState(A1, A.init[0], frozenset()), A, ())
    assert a == NodeDeliver(A1, 7)
    _, B = proc_with("proc P() = send(m(1)) . call(P)")
    assert node_trans(NodeState(A1, B.init[0], frozenset()), B, ()) == []


def test_node_topology_updates():
    _, A = proc_with("proc P() = deliver(7) . call(P)")
    n = NodeState(A1, A.init[0], frozenset())
    steps = {a: t for a, t in node_trans(n, A, (A1, A2, A3))}
    assert steps[Connect(A1, A2)].R == {A2}
    assert steps[Connect(A2, A1)].R == {A2}
    assert steps[Connect(A2, A3)] is n
    n2 = NodeState(A1, A.init[0], frozenset({A2}))
    assert dict(node_trans(n2, A, (A1, A2)))[Disconnect(A2, A1)].R == frozenset()


def test_mk_node_initial():
    A = models.ptoy(1)
    N = mk_node(1, A, ())
    assert N.init == tuple(NodeState(A1, a, frozenset()) for a in A.init)


def test_node_states_are_interned():
    A = models.ptoy(1)
    assert NodeState(A1, A.init[0], frozenset()) is NodeState(A1, A.init[0], frozenset())


# -- partial and closed networks ------------------------------------------------

def cast_net():
    spec = label_spec(parse_spec(
        "message m(int)\nproc P(x: int = 0, y: msg) = broadcast(m(1)) . call(P) "
        "+ receive(z -> y := z) . [[ x := 1 ]] . call(P)"))
    return pnet(lambda i: mk_seqp(spec, i), NetPar(node(1, {2}), node(2, {1})))


def test_pnet_cast_pairs_with_arrival():
    net = cast_net()
    s = net.init_states()[0]
    casts = [(a, t) for a, t in net.trans(s, topology=False) if isinstance(a, StarCast)]
    assert {a for a, _ in casts} == {StarCast(frozenset({A2}), Msg("m", (1,))),
                                     StarCast(frozenset({A1}), Msg("m", (1,)))}
    a, t = next(c for c in casts if c[0].R == {A2})
    assert t.right.inner.xi["y"] == Msg("m", (1,))


def test_pnet_arrive_combines():
    net = cast_net()
    s = net.init_states()[0]
    m = Msg("m", (5,))
    offers = {a: t for a, t in net.arrive_steps(s, m)}
    assert Arrive(frozenset(), frozenset({A1, A2}), m) in offers
    assert offers[Arrive(frozenset(), frozenset({A1, A2}), m)] == s
    assert Arrive(frozenset({A1, A2}), frozenset(), m) in offers


def test_pnet_tau_interleaves(toy):
    net = pnet(models.toy_node_proc(), models.PAIR2)
    s = net.init_states()[0]
    m = Msg("newpkt", (1, A1))
    (t,) = net.arrive(s, m, frozenset({A1}))
    taus = [x for a, x in net.trans(t, topology=False) if a == TAU]
    assert taus and all(x.right == t.right for x in taus)


def test_linear_net_initial_state():
    net = pnet(models.toy_node_proc(), models.LINEAR3)
    (s,) = net.init_states()
    assert isinstance(s, SubnetState) and isinstance(s.right, SubnetState)
    assert [s.left.R, s.right.left.R, s.right.right.R] == [{A2}, {A1, A3}, {A2}]
    assert str(models.LINEAR3) == "(<1; {2}> || (<2; {1,3}> || <3; {2}>))"


def test_closed_casts_become_tau_and_newpkt_injects():
    net = pnet(models.toy_node_proc(), models.LINEAR3)
    A = closed(net, [(1, 3, 1)])
    (s,) = A.init
    steps = A.trans(s)
    assert [a for a, _ in steps] == [NewPkt(A1, 1, A3)]
    assert closed(net).init == tuple(net.init_states())


def test_closed_blocks_foreign_arrivals_and_casts_are_internal():
    net = cast_net()
    A = closed(net)
    s = A.init[0]
    acts = {a for a, _ in A.trans(s)}
    assert acts == {TAU}


def test_topology_actions_only_when_enabled():
    net = cast_net()
    s = net.init_states()[0]
    assert not any(isinstance(a, (Connect, Disconnect)) for a, _ in closed(net).trans(s))
    on = [a for a, _ in closed(net, topology_changes=True).trans(s)]
    assert Connect(A1, A2) in on and Disconnect(A2, A1) in on


def test_net_ips_and_wellformed_trees():
    assert net_tree_ips(models.LINEAR3) == {A1, A2, A3}
    assert not wf_net_tree(NetPar(node(1), node(1)))
    with pytest.raises(ValueError):
        pnet(models.toy_node_proc(), NetPar(node(1), node(1)))


def test_shape_and_addresses_preserved():
    A = models.toy_net(models.LINEAR3, topology_changes=True, dsts=[3])
    ex = explore(A, budget=Budget(max_states=3000, max_newpkts=1))
    for s in ex.states:
        assert net_ips(s) == {A1, A2, A3}
        assert isinstance(s.right, SubnetState)
        assert [s.left.i, s.right.left.i, s.right.right.i] == [A1, A2, A3]


def test_ranges_constant_without_topology_changes():
    A = models.toy_net(models.LINEAR3, dsts=[3])
    ex = explore(A, budget=Budget(max_states=3000, max_newpkts=2))
    for s in ex.states:
        assert [s.left.R, s.right.left.R, s.right.right.R] == [{A2}, {A1, A3}, {A2}]


# -- queue lemmas -------------------------------------------------------------

def test_queue_lemmas_on_every_transition():
    msgs = [Msg("pkt", (d, A1)) for d in range(2)]
    Q = models.qmsg(msgs)
    ex = explore(Q, budget=Budget(max_depth=8))
    assert ex.transitions
    for (s, _), a, (t, _) in ex.transitions:
        assert models.qprops(s, a, t), (s, a, t)


def test_queue_receive_appends():
    m = Msg("pkt", (1, A1))
    Q = models.qmsg([m])
    assert Q.init[0].xi["msgs"] == ()
    (a, t), = Q.steps(Q.init[0])
    assert a == ReceiveA(m) and t.xi["msgs"] == (m,)


# -- undef versus arbitrary values ---------------------------------------------------

def test_havoc_concretises_undef(toy):
    domains = {"int": range(2), "ip": (A1, A2), "msg": (Msg("pkt", (0, A1)),)}
    A = mk_seqp(toy, 1, havoc=domains)
    assert len(A.init) == 2 * 2 * 1
    assert all(UNDEF not in dict(s.xi).values() for s in A.init)


def test_undef_stands_in_for_any_value(toy):
    # the toy invariants get the same verdicts when cleared locals hold arbitrary values
    from awn.verify import check_invariant, check_step_invariant
    universe = models.toy_universe(range(3), (1, 2))
    domains = {"int": range(3), "ip": (A1, A2), "msg": universe}
    for i in (1, 2):
        plain = mk_seqp(toy, i, universe)
        wild = mk_seqp(toy, i, universe, havoc=domains)
        for P in (models.inv1(toy), models.inv4(toy), models.no_is_zero):
            a, b = check_invariant(plain, P), check_invariant(wild, P)
            assert a.status == b.status
            assert a.status == "violated" or a.complete and b.complete
        a = check_step_invariant(plain, models.inv2)
        b = check_step_invariant(wild, models.inv2)
        assert a.holds and b.holds and b.states > a.states
