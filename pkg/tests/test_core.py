import itertools

import pytest

from teb import crypto
from teb.core import (
    CA, EA, EC, EN, ET, POA, POM, POP,
    AuthContext, BootstrapSession, CertC, Procedure, ProcedureSet,
    decoupled_mode, execute, is_valid_ordering, run_procedure, valid_orderings,
)
from teb.errors import ChainInvalid, DependencyUnmet, ProcedureFailed, SlotAlreadyFilled
from teb.names import Name
from teb.packets import make_certificate, self_signed
from teb.schema import TrustSchema

ANCHOR_KP = crypto.keygen(b"stub-anchor")
ANCHOR = self_signed(Name("/stub"), ANCHOR_KP)


def stub_procedures(sign_with=ANCHOR_KP):
    dev = crypto.keygen(b"stub-device")

    def ca(cac):
        return {"poa": POA(b"controller", b"ok")}

    def ea(eac):
        return {"pom": POM(b"device", b"ok")}

    def et(poa):
        return {"anchor": ANCHOR, "schema": TrustSchema.implicit(), "certc": CertC({"pub": dev.public})}

    def en(pom, name_conv=None):
        return {"pop": POP(["/stub/device"], pom.enew_id, b"ok")}

    def ec(pop, certc, anchor, schema):
        cert = make_certificate(pop.names[0], certc.material["pub"], sign_with, anchor.name, "controller")
        return {"certificates": [cert]}

    return ProcedureSet(ca, ea, et, en, ec)


def fresh():
    return BootstrapSession(AuthContext("test", {}), AuthContext("test", {}))


def test_six_valid_orderings():
    orders = valid_orderings()
    assert len(orders) == 6
    assert (CA, EA, ET, EN, EC) in orders and (EA, EN, CA, ET, EC) in orders


def test_every_permutation_classified():
    procs = stub_procedures()
    accepted = 0
    for perm in itertools.permutations(Procedure):
        s = fresh()
        if is_valid_ordering(perm):
            execute(s, procs, perm)
            assert s.completed and s.order == perm
            accepted += 1
        else:
            with pytest.raises(DependencyUnmet):
                execute(s, procs, perm)
            assert not s.completed
    assert accepted == 6


def test_slots_are_write_once():
    s = fresh()
    procs = stub_procedures()
    run_procedure(s, CA, procs.cont_auth)
    with pytest.raises(SlotAlreadyFilled):
        run_procedure(s, CA, procs.cont_auth)


def test_dependency_names_slot():
    with pytest.raises(DependencyUnmet) as info:
        run_procedure(fresh(), ET, stub_procedures().enew_trust)
    assert "poa" in str(info.value)


def test_failure_is_wrapped_and_logged():
    def broken(cac):
        raise ValueError("boom")

    s = fresh()
    with pytest.raises(ProcedureFailed) as info:
        run_procedure(s, CA, broken)
    assert info.value.procedure == "CONT_AUTH"
    assert isinstance(info.value.cause, ValueError)
    assert s.log[-1].outcome == "failed" and s.poa is None


def test_missing_output_fails():
    s = fresh()
    with pytest.raises(ProcedureFailed):
        run_procedure(s, CA, lambda cac: {})


def test_foreign_slot_write_fails():
    s = fresh()
    with pytest.raises(ProcedureFailed):
        run_procedure(s, CA, lambda cac: {"poa": POA(b"", b""), "anchor": ANCHOR})


def test_ec_rejects_bad_certificate():
    s = fresh()
    with pytest.raises(ProcedureFailed) as info:
        execute(s, stub_procedures(sign_with=crypto.keygen(b"not-the-anchor")))
    assert isinstance(info.value.cause, ChainInvalid)
    assert not s.completed and s.certificates is None


def test_decoupled_keeps_ordering_rules():
    s = decoupled_mode(fresh())
    execute(s, stub_procedures(), (EA, EN, CA, ET, EC))
    assert s.decoupled and s.completed
    assert s.to_dict()["order"] == ["EA", "EN", "CA", "ET", "EC"]


def test_procedure_parse():
    assert Procedure.parse("EN") is EN and Procedure.parse("ENEW_NAMING") is EN
