import pytest

from teb.domain import Node
from teb.errors import EmptyMailbox, FetchTimeout, NoRoute, ProximityViolation
from teb.names import Name
from teb.packets import Data, Interest, sign_data
from teb import crypto
from teb.simnet import ContentStore, Network, OobKind

KP = crypto.keygen(b"simnet")


def data(name, content=b""):
    return sign_data(Name(name), content, KP, Name("/k/KEY/00000000/self/v=1"))


def test_longest_prefix_match():
    net = Network()
    a, b, c = (Node(net, x) for x in "abc")
    a.publish(data("/x/y/z", b"from a"), register=Name("/x"))
    b.publish(data("/x/y/z", b"from b"), register=Name("/x/y"))
    assert c.fetch("/x/y/z").content == b"from b"
    assert net.received["b"] == 1 and net.received["a"] == 0


def test_producer_excluded_from_own_route():
    net = Network()
    a = Node(net, "a")
    a.publish(data("/x/1"), register=Name("/x"))
    with pytest.raises(FetchTimeout):
        a.fetch("/x/1")
    with pytest.raises(NoRoute):
        net.express_interest("a", Interest(Name("/x/1")))


def test_cs_hit_bypasses_producer():
    net = Network()
    a, b, c = (Node(net, x) for x in "abc")
    a.publish(data("/x/1"), register=Name("/x"))
    b.fetch("/x/1")
    c.fetch("/x/1")
    assert net.received["a"] == 1
    assert len(net.transcript.select(event="cs-hit")) == 1


def test_cs_fifo_eviction():
    cs = ContentStore(2)
    for i in range(3):
        cs.put(data(f"/n/{i}"))
    assert Name("/n/0") not in cs and Name("/n/2") in cs and len(cs) == 2
    cs.put(data("/n/1", b"again"))  # refresh keeps position
    cs.put(data("/n/3"))
    assert Name("/n/1") not in cs
    assert len(ContentStore(0)) == 0


def test_timeout_advances_clock():
    net = Network(interest_timeout=7)
    Node(net, "a").serve("/silent", lambda i, f: None)
    b = Node(net, "b")
    before = net.step
    with pytest.raises(FetchTimeout):
        b.fetch("/silent/q")
    assert net.step - before >= 7
    assert net.transcript.select(event="timeout")


def test_mismatched_data_dropped():
    net = Network()
    Node(net, "a").serve("/q", lambda i, f: data("/other"))
    with pytest.raises(FetchTimeout):
        Node(net, "b").fetch("/q/1")


def test_forwarding_hint():
    net = Network()
    a = Node(net, "a")
    a.serve("/elsewhere", lambda i, f: data(str(i.name)), register=False)
    net.register_prefix("a", Name("/ca"))
    b = Node(net, "b")
    with pytest.raises(FetchTimeout):
        b.fetch("/elsewhere/1")
    assert b.fetch("/elsewhere/1", forwarding_hint=Name("/ca")).name == Name("/elsewhere/1")


def test_broadcast_first_answer_wins():
    net = Network()
    Node(net, "quiet", broadcast=True)
    loud = Node(net, "loud", broadcast=True)
    loud.serve("/hello", lambda i, f: data("/hello/loud"), register=False)
    b = Node(net, "b")
    got = net.broadcast_interest("b", Interest(Name("/hello")))
    assert got.name == Name("/hello/loud")


def test_mailboxes_and_addresses():
    net = Network()
    Node(net, "dev")
    net.bind_address("dev", OobKind.EMAIL, "dev@example.com")
    net.oob_send(OobKind.EMAIL, "dev@example.com", b"pin")
    with pytest.raises(EmptyMailbox):
        net.oob_recv(OobKind.EMAIL, "intruder", "dev@example.com")
    assert net.oob_recv(OobKind.EMAIL, "dev", "dev@example.com") == b"pin"
    with pytest.raises(EmptyMailbox):
        net.oob_recv(OobKind.EMAIL, "dev", "dev@example.com")


def test_vibration_needs_proximity():
    net = Network()
    for x in ("phone", "plug", "far"):
        Node(net, x)
    net.set_proximity("phone", "plug")
    with pytest.raises(ProximityViolation):
        net.oob_send(OobKind.VIBRATION, "far", b"k", sender="phone")
    assert net.oob_broadcast(OobKind.VIBRATION, "phone", b"k") == ["plug"]
    net.set_proximity("phone", "plug", near=False)
    assert net.oob_broadcast(OobKind.VIBRATION, "phone", b"k") == []


def _scripted(seed):
    net = Network(seed=seed)
    a, b = Node(net, "a"), Node(net, "b")
    a.serve("/svc", lambda i, f: sign_data(i.name, a.rng("x").randbytes(8), a.keypair, Name("/a/KEY/0/self/v=1")))
    got = [b.fetch(f"/svc/{i}").content for i in range(5)]
    return net.transcript.to_jsonl(), got


def test_transcript_deterministic():
    assert _scripted(3) == _scripted(3)
    assert _scripted(3)[1] != _scripted(4)[1]


def test_transcript_marks():
    net = Network()
    a, b = Node(net, "a"), Node(net, "b")
    a.publish(data("/a/KEY/abcd0123/self/v=1"), register=Name("/a"))
    m = net.transcript.mark()
    b.fetch("/a/KEY/abcd0123/self/v=1")
    tail = net.transcript.since(m)
    assert tail.certificate_fetches("b") == 1 and tail.expressed("b") == 1
