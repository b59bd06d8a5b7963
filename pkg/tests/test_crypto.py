import pytest

from teb import crypto
from teb.errors import AuthFailure, InvalidPoint, ProtocolOrder


def test_keygen_is_deterministic_and_sized():
    a, b = crypto.keygen(b"seed"), crypto.keygen(b"seed")
    assert a == b
    assert len(a.public) == crypto.PUBLIC_KEY_SIZE and len(a.private) == 32
    assert crypto.keygen(b"other") != a
    assert crypto.keypair_from_private(a.private) == a
    with pytest.raises(ValueError):
        crypto.keygen(b"")
    with pytest.raises(ValueError):
        crypto.keypair_from_private(b"short")


def test_sign_verify():
    kp = crypto.keygen(b"s")
    sig = crypto.sign(kp.private, b"msg")
    assert crypto.verify(kp.public, b"msg", sig)
    assert not crypto.verify(kp.public, b"msg!", sig)
    assert not crypto.verify(crypto.keygen(b"t").public, b"msg", sig)
    assert not crypto.verify(b"\x00" * 5, b"msg", sig)


def test_dh_is_symmetric():
    a, b = crypto.keygen(b"a"), crypto.keygen(b"b")
    assert crypto.dh_agree(a.private, b.public) == crypto.dh_agree(b.private, a.public)
    with pytest.raises(InvalidPoint):
        crypto.dh_agree(a.private, b"\x00" * 10)
    # all-zero X25519 half is a low-order point
    with pytest.raises(InvalidPoint):
        crypto.dh_agree(a.private, b.public[:32] + b"\x00" * 32)


def test_aead():
    k = crypto.SymKey(b"\x01" * 32)
    ct = crypto.aead_encrypt(k, b"secret", b"ad", 5)
    assert crypto.aead_decrypt(k, ct, b"ad") == b"secret"
    with pytest.raises(AuthFailure):
        crypto.aead_decrypt(k, ct, b"other ad")
    with pytest.raises(AuthFailure):
        crypto.aead_decrypt(crypto.SymKey(b"\x02" * 32), ct, b"ad")
    with pytest.raises(AuthFailure):
        crypto.aead_decrypt(k, ct[:10], b"ad")
    with pytest.raises(ValueError):
        crypto.SymKey(b"short")


def test_hybrid_and_hmac():
    kp = crypto.keygen(b"r")
    ct = crypto.hybrid_encrypt(kp.public, b"key material", b"ad", b"seed")
    assert crypto.hybrid_decrypt(kp.private, ct, b"ad") == b"key material"
    with pytest.raises(AuthFailure):
        crypto.hybrid_decrypt(crypto.keygen(b"q").private, ct, b"ad")
    k = crypto.SymKey(b"m" * 32)
    assert crypto.hmac_verify(k, b"x", crypto.hmac_sign(k, b"x"))
    assert not crypto.hmac_verify(k, b"y", crypto.hmac_sign(k, b"x"))


def _pake(pw_a, pw_b):
    a = crypto.PakeState(crypto.PakeRole.INITIATOR, pw_a, b"sa")
    b = crypto.PakeState(crypto.PakeRole.RESPONDER, pw_b, b"sb")
    ma, mb = crypto.pake_start(a), crypto.pake_start(b)
    ka, ca = crypto.pake_finish(a, mb)
    kb, cb = crypto.pake_finish(b, ma)
    return ka, kb, crypto.pake_confirm(a, cb), crypto.pake_confirm(b, ca)


def test_pake_agrees_on_same_password():
    ka, kb, ok_a, ok_b = _pake(b"1234", b"1234")
    assert ka == kb and ok_a and ok_b


def test_pake_rejects_wrong_password():
    ka, kb, ok_a, ok_b = _pake(b"1234", b"4321")
    assert ka != kb and not ok_a and not ok_b


def test_pake_state_machine():
    s = crypto.PakeState(crypto.PakeRole.INITIATOR, b"pw", b"x")
    with pytest.raises(ProtocolOrder):
        crypto.pake_finish(s, b"junk")
    crypto.pake_start(s)
    with pytest.raises(ProtocolOrder):
        crypto.pake_start(s)
    with pytest.raises(AuthFailure):
        crypto.pake_finish(s, b"junk")


def test_seeded_rng_is_reproducible():
    assert crypto.seeded_rng("a", 1).random() == crypto.seeded_rng("a", 1).random()
    assert crypto.seeded_rng("a", 1).random() != crypto.seeded_rng("a", 2).random()
