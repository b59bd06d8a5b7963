import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from teb import crypto
from teb.errors import AuthFailure, FetchTimeout, ChainInvalid, NoKek, NoSigningIdentity, NotAuthorized, StaleVersion
from teb.names import Name
from teb.packets import decode_map, encode_map, make_certificate, sign_data
from teb.schema import TrustState, define_minimal_trust_zone
from teb.tib import AccessManager, KeyChain, Tib, ValidatedKeyCache, kdk_name, kek_name, split_kek_name
from teb.core import BootstrapSession

from _worlds import TEAM, corp_world, ssp_world


def grant(c, tibs, prefix, who):
    consumers = [cert.name for w in who for cert in tibs[w].keychain.certificates()]
    return AccessManager(c, [(prefix, consumers)])


@pytest.fixture
def corp():
    net, c, tibs = corp_world(("alice", "bob", "carol", "mallory"), no_cache=("carol",))
    grant(c, tibs, f"{TEAM}/alice", ["bob", "carol"])
    return net, c, tibs


def counted(net, who, fn):
    mark = net.transcript.mark()
    out = fn()
    window = net.transcript.since(mark)
    return out, window.certificate_fetches(who), window.expressed(who)


def test_name_helpers():
    kek = kek_name("/a/b", "01ab")
    assert kek == Name("/a/b/NAC/KEK/01ab") and split_kek_name(kek) == (Name("/a/b"), "01ab")
    kdk = kdk_name("/a/b", "01ab", Name("/a/b/KEY/1/x/v=1"))
    assert kdk[:5] == Name("/a/b/NAC/KDK/01ab")
    with pytest.raises(ValueError):
        split_kek_name(Name("/a/b/c"))


def test_round_trip_and_cache_counts(corp):
    net, _, tibs = corp
    app, ck = tibs["alice"].produce(f"{TEAM}/alice/data/1", b"reading 1")
    assert ck.name[:6] == Name(f"{TEAM}/alice/CK")
    got, certs, interests = counted(net, "bob", lambda: tibs["bob"].consume(app))
    assert got == (app.name, b"reading 1") and (certs, interests) == (5, 7)
    app2, _ = tibs["alice"].produce(f"{TEAM}/alice/data/2", b"reading 2")
    got, certs, interests = counted(net, "bob", lambda: tibs["bob"].consume(app2))
    assert got[1] == b"reading 2" and (certs, interests) == (0, 1)
    _, certs, interests = counted(net, "bob", lambda: tibs["bob"].consume(app2))
    assert (certs, interests) == (0, 0)


def test_disabled_cache_refetches(corp):
    net, _, tibs = corp
    for i in range(3):
        app, _ = tibs["alice"].produce(f"{TEAM}/alice/data/{i}", b"x")
        net.content_store.clear()
        got, certs, _ = counted(net, "carol", lambda: tibs["carol"].consume(app))
        assert got[1] == b"x" and certs == 5


def test_ck_is_fresh_per_produce(corp):
    _, _, tibs = corp
    a1, c1 = tibs["alice"].produce(f"{TEAM}/alice/data/1", b"same")
    a2, c2 = tibs["alice"].produce(f"{TEAM}/alice/data/1", b"same")
    assert c1.name != c2.name and a1.content != a2.content


def test_unauthorized_consumer(corp):
    _, _, tibs = corp
    app, _ = tibs["alice"].produce(f"{TEAM}/alice/data/1", b"secret")
    with pytest.raises(NotAuthorized):
        tibs["mallory"].consume(app)


def test_no_kek(corp):
    _, _, tibs = corp
    with pytest.raises(NoKek):
        tibs["bob"].produce(f"{TEAM}/bob/data/1", b"x")


def test_no_signing_identity(corp):
    _, c, tibs = corp
    grant(c, tibs, f"{TEAM}/bob", ["alice"])
    with pytest.raises(NoSigningIdentity):
        tibs["alice"].produce(f"{TEAM}/bob/data/1", b"x")


def test_forged_and_tampered(corp):
    _, _, tibs = corp
    app, _ = tibs["alice"].produce(f"{TEAM}/alice/data/1", b"x")
    forged = sign_data(app.name, app.content, crypto.keygen(b"mallory"), app.key_locator)
    with pytest.raises(ChainInvalid) as info:
        tibs["bob"].consume(forged)
    assert info.value.link == 0
    kp, cert = tibs["alice"].signing_identity(app.name)
    fields = decode_map(app.content)
    ct = bytearray(fields["ct"])
    ct[-1] ^= 1
    tampered = sign_data(app.name, encode_map({"ck": fields["ck"], "ct": bytes(ct)}), kp, cert.name)
    with pytest.raises(AuthFailure):
        tibs["bob"].consume(tampered)


def test_small_cache_evicts_fifo():
    net, c, tibs = corp_world(("alice", "bob"), cache=2)
    grant(c, tibs, f"{TEAM}/alice", ["bob"])
    for i in range(3):
        app, _ = tibs["alice"].produce(f"{TEAM}/alice/data/{i}", b"x")
        assert tibs["bob"].consume(app)[1] == b"x"
    m = tibs["bob"].cache.metrics()
    assert m["size"] == 2 and m["evictions"] > 0


def test_cache_entries_revalidate(corp):
    net, _, tibs = corp
    for i in range(3):
        app, _ = tibs["alice"].produce(f"{TEAM}/alice/data/{i}", b"x")
        tibs["bob"].consume(app)
    bob = tibs["bob"]
    fresh = Tib(tibs["carol"].node, bob.anchor, bob.schema, KeyChain())
    assert len(bob.cache) > 0
    for name in bob.cache.names():
        data = bob.cache.lookup(name)
        assert fresh.validate(data).data.name == name


def test_cache_unit():
    with pytest.raises(ValueError):
        ValidatedKeyCache(0)
    cache = ValidatedKeyCache(2)
    kp = crypto.keygen(b"c")
    states = [TrustState(sign_data(Name(f"/n/{i}"), b"", kp, Name("/k"))) for i in range(3)]
    for s in states:
        cache.insert(s)
    assert Name("/n/0") not in cache and cache.lookup(Name("/n/2")) is states[2].data
    assert cache.lookup(Name("/n/0")) is None
    m = cache.metrics()
    assert (m["hits"], m["misses"], m["evictions"], m["hit_rate"]) == (1, 1, 1, 0.5)


def test_keychain_rejects_wrong_key():
    _, c, _ = ssp_world(("plug1",))
    cert = c.issue("/home/x", crypto.keygen(b"x").public)
    with pytest.raises(ValueError):
        KeyChain().add(cert, crypto.keygen(b"y"))


def test_tib_needs_completed_session():
    with pytest.raises(ValueError):
        Tib.from_session(None, BootstrapSession())


def test_most_specific_identity_signs():
    net, c, tibs = ssp_world(("plug1",))
    tib = tibs["plug1"]
    sub_kp = crypto.keygen(b"sub")
    tib.keychain.add(c.issue("/home/plug1/sub", sub_kp.public), sub_kp)
    _, cert = tib.signing_identity(Name("/home/plug1/sub/x"))
    assert cert.subject == Name("/home/plug1/sub")
    _, cert = tib.signing_identity(Name("/home/plug1/y"))
    assert cert.subject == Name("/home/plug1")
    with pytest.raises(NoSigningIdentity):
        tib.signing_identity(Name("/home/lamp2/y"))


def test_schema_distribution():
    net, c, tibs = ssp_world()
    ctib = Tib.for_controller(c)
    plug = tibs["plug1"]
    ctib.publish_schema(define_minimal_trust_zone("/home"), 1)
    with pytest.raises(StaleVersion):
        ctib.publish_schema(define_minimal_trust_zone("/home"), 1)
    schema = plug.fetch_schema()
    assert schema.mode.value == "explicit" and plug.schema_version == 1
    with pytest.raises(StaleVersion):
        plug.fetch_schema()
    with pytest.raises(ValueError):
        plug.publish_schema(schema, 9)
    # a device key is not licensed to sign schema updates under the explicit schema
    lamp = tibs["lamp2"]
    kp, cert = lamp.signing_identity(Name("/home/lamp2/x"))
    rogue = sign_data(Name("/home/SCHEMA/v=7"), schema.to_text().encode(), kp, cert.name)
    with pytest.raises(ChainInvalid):
        plug.accept_schema(rogue)
    # still implicit: anchor-certified device keys sign data, but not schemas
    with pytest.raises(ChainInvalid):
        tibs["lamp2"].accept_schema(rogue)
    stranger = sign_data(Name("/home/SCHEMA/v=8"), b"", crypto.keygen(b"z"), c.anchor.name)
    with pytest.raises(ChainInvalid):
        lamp.accept_schema(stranger)


def test_schema_upgrade_keeps_traffic_flowing():
    net, c, tibs = ssp_world()
    AccessManager(c, [("/home/plug1", [cert.name for cert in tibs["lamp2"].keychain.certificates()])])
    Tib.for_controller(c).publish_schema(define_minimal_trust_zone("/home"), 1)
    for t in tibs.values():
        t.fetch_schema()
    app, _ = tibs["plug1"].produce("/home/plug1/power/1", b"42W")
    assert tibs["lamp2"].consume(app)[1] == b"42W"


def test_certificates_served_by_their_owner():
    net, c, tibs = ssp_world()
    cert = tibs["plug1"].keychain.certificates()[0]
    del c.repo[cert.name]
    net.content_store.clear()
    before = net.received["plug1"]
    assert tibs["lamp2"].node.fetch(cert.name) == cert.data
    assert net.received["plug1"] == before + 1
    net.content_store.clear()
    assert tibs["lamp2"].node.fetch(cert.name) == cert.data


def test_unserved_certificate_times_out():
    net, c, tibs = ssp_world()
    kp = crypto.keygen(b"ghost")
    ghost = make_certificate(Name("/home/ghost"), kp.public, c.keypair, c.anchor.name, "controller")
    data = sign_data(Name("/home/ghost/x"), b"", kp, ghost.name)
    with pytest.raises(FetchTimeout):
        tibs["lamp2"].validate(data)


def test_kdk_useless_to_other_keys(corp):
    _, c, tibs = corp
    app, ck = tibs["alice"].produce(f"{TEAM}/alice/data/1", b"secret")
    kid = split_kek_name(Name(decode_map(ck.content)["kek"].decode()))[1]
    bob_cert = tibs["bob"].keychain.certificates()[0]
    name = kdk_name(f"{TEAM}/alice", kid, bob_cert.name)
    kdk = tibs["mallory"].node.fetch(name)
    mallory_kp = tibs["mallory"].keychain.keypair_for(tibs["mallory"].keychain.certificates()[0].name)
    with pytest.raises(AuthFailure):
        crypto.hybrid_decrypt(mallory_kp.private, kdk.content, str(name).encode())


_WORLD = {}


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(st.text("abcxyz0123", min_size=1, max_size=5), min_size=1, max_size=3), st.binary(max_size=64 * 1024))
def test_round_trip_property(comps, content):
    if not _WORLD:
        net, c, tibs = corp_world(("alice", "bob"))
        grant(c, tibs, f"{TEAM}/alice", ["bob"])
        _WORLD.update(tibs)
    name = Name(f"{TEAM}/alice/data").append(*comps)
    app, _ = _WORLD["alice"].produce(name, content)
    assert _WORLD["bob"].consume(app) == (name, content)
