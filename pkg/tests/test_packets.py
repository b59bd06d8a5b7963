import random

import pytest
from hypothesis import given, settings, strategies as st

from teb import crypto
from teb.errors import MalformedPacket
from teb.names import Name
from teb.packets import (
    Certificate,
    Data,
    Interest,
    certificate_name,
    decode,
    decode_list,
    decode_map,
    encode,
    encode_list,
    encode_map,
    hmac_data,
    is_certificate_name,
    make_certificate,
    self_signed,
    sign_data,
    sign_interest,
    signed_portion,
    verify_packet,
    verify_packet_hmac,
)

KP = crypto.keygen(b"packets")
OTHER = crypto.keygen(b"other")
names = st.lists(st.binary(min_size=1, max_size=8), min_size=1, max_size=6).map(Name)


@given(names, st.binary(max_size=200), st.one_of(st.none(), names))
def test_data_round_trip(name, content, loc):
    d = Data(name, content, loc)
    assert decode(encode(d)) == d


@given(names, st.one_of(st.none(), st.binary(max_size=64)), st.one_of(st.none(), names))
def test_interest_round_trip(name, params, hint):
    i = Interest(name, params, forwarding_hint=hint)
    assert decode(encode(i)) == i


def test_encoding_is_deterministic():
    a = sign_data(Name("/a/b"), b"x", KP, Name("/k/KEY/1/self/v=1"))
    b = sign_data(Name("/a/b"), b"x", KP, Name("/k/KEY/1/self/v=1"))
    assert encode(a) == encode(b)
    # the signature is the final field; everything before it is signed
    assert encode(a).startswith(signed_portion(a))


def test_signed_packets_verify():
    d = sign_data(Name("/a"), b"hello", KP, Name("/a/KEY/x/self/v=1"))
    assert verify_packet(d, KP.public)
    assert not verify_packet(d, OTHER.public)
    i = sign_interest(Name("/a/CMD"), b"p", KP)
    assert verify_packet(decode(encode(i)), KP.public)
    assert not verify_packet(Data(Name("/a")), KP.public)


def test_hmac_packets():
    k = crypto.SymKey(b"k" * 32)
    d = hmac_data(Name("/x"), b"c", k)
    assert verify_packet_hmac(d, k)
    assert not verify_packet_hmac(d, crypto.SymKey(b"j" * 32))
    assert not verify_packet(d, KP.public)


@pytest.mark.parametrize("buf", [b"", b"\x07\x00\x00\x00\x00", b"\x06\x00\x00\x00\x05ab"])
def test_malformed(buf):
    with pytest.raises(MalformedPacket):
        decode(buf)


def test_trailing_bytes_rejected():
    with pytest.raises(MalformedPacket):
        decode(encode(Data(Name("/a"))) + b"\x00")


@settings(max_examples=50)
@given(st.dictionaries(st.text(min_size=1, max_size=5), st.binary(max_size=20), max_size=5))
def test_map_round_trip(m):
    assert decode_map(encode_map(m)) == m


@given(st.lists(st.binary(max_size=20), max_size=6))
def test_list_round_trip(items):
    assert decode_list(encode_list(items)) == items


def test_map_is_canonical():
    assert encode_map({"b": b"2", "a": b"1"}) == encode_map({"a": b"1", "b": b"2"})


def test_certificates():
    anchor = self_signed(Name("/ndnfit"), KP)
    assert anchor.is_self_signed and anchor.key_locator == anchor.name
    assert anchor.name[:-4] == Name("/ndnfit")
    assert anchor.key_id == crypto.key_id(KP.public) and len(anchor.key_id) == 8
    cert = make_certificate(Name("/ndnfit/alice"), OTHER.public, KP, anchor.name, "controller", 3)
    assert cert.name == certificate_name(Name("/ndnfit/alice"), OTHER.public, "controller", 3)
    assert (cert.subject, cert.issuer_id, cert.version) == (Name("/ndnfit/alice"), "controller", 3)
    assert cert.public_key == OTHER.public
    assert verify_packet(cert.data, KP.public)
    assert Certificate.from_bytes(cert.to_bytes()) == cert
    assert is_certificate_name(cert.name)
    assert not is_certificate_name(Name("/ndnfit/alice/data/v=1"))
    with pytest.raises(ValueError):
        Certificate(Data(Name("/ndnfit/alice"), OTHER.public))


def test_single_byte_flips_break_signature():
    rng = random.Random(7)
    d = sign_data(Name("/a/b/c"), b"content bytes", KP, Name("/a/KEY/k/self/v=1"))
    wire = encode(d)
    for pos in range(len(signed_portion(d))):
        buf = bytearray(wire)
        buf[pos] ^= rng.randrange(1, 256)
        try:
            p = decode(bytes(buf))
        except MalformedPacket:
            continue
        assert not verify_packet(p, KP.public), pos
