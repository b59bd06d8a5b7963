import pytest
from hypothesis import given, strategies as st

from teb.errors import MalformedName
from teb.names import Name, is_prefix_of, name_format, name_parse

components = st.binary(min_size=1, max_size=12)


@given(st.lists(components, max_size=8))
def test_text_round_trip(comps):
    n = Name(comps)
    assert name_parse(name_format(n)) == n


def test_escapes():
    n = Name([b"a/b", b"50%", b"\x00\xff"])
    text = str(n)
    assert text == "/a%2Fb/50%25/%00%FF"
    assert Name(text) == n


@pytest.mark.parametrize("bad", ["", "ndnfit", "/a//b", "//"])
def test_malformed(bad):
    with pytest.raises(MalformedName):
        Name(bad)


def test_root_and_append():
    assert len(Name("/")) == 0
    n = Name("/ndnfit").append("alice", b"KEY")
    assert n == Name("/ndnfit/alice/KEY")
    assert n[:2] == Name("/ndnfit/alice")
    assert n.text(-1) == "KEY"
    with pytest.raises(MalformedName):
        Name("/a").append("")


@given(st.lists(components, max_size=5), st.lists(components, max_size=5))
def test_prefix_relation(a, b):
    na, nab = Name(a), Name(a + b)
    assert is_prefix_of(na, nab)
    assert nab.is_prefix_of(na) == (not b)


def test_ordering_and_hash():
    names = [Name("/b"), Name("/a/b"), Name("/a")]
    assert sorted(names) == [Name("/a"), Name("/a/b"), Name("/b")]
    assert len({Name("/a"), Name(["a"])}) == 1
    with pytest.raises(AttributeError):
        Name("/a")._components = ()
