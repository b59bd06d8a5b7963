"""Candidate certificate chains for the lvs-test example schema."""

import random

from teb import crypto
from teb.names import Name
from teb.packets import make_certificate, self_signed, sign_data

ANCHOR_KP = crypto.keygen(b"lvs-anchor")
ANCHOR = self_signed(Name("/lvs-test"), ANCHOR_KP)


def _pick(rng, good, bad, p_bad=0.2):
    return rng.choice(bad) if rng.random() < p_bad else good


def candidate_chain(rng: random.Random) -> list:
    """A chain of Data packets ending at the anchor, possibly subtly wrong."""
    site = _pick(rng, "lvs-test", ["lvs", "other"], 0.05)
    admin_name = rng.choice(["amy", "ann"])
    author_name = rng.choice(["bob", "bea"])
    admin_kp = crypto.keygen(f"admin/{admin_name}".encode())
    author_kp = crypto.keygen(f"author/{author_name}".encode())

    admin_lit = _pick(rng, "admin", ["author", "admins"], 0.1)
    admin = make_certificate(Name([site, admin_lit, admin_name]), admin_kp.public, ANCHOR_KP,
                             ANCHOR.name, _pick(rng, "root", ["amy"], 0.1))
    issuer_id = _pick(rng, admin_name, ["ann" if admin_name == "amy" else "amy", "root"], 0.25)
    author = make_certificate(Name([site, _pick(rng, "author", ["admin"], 0.1), author_name]),
                              author_kp.public, admin_kp, admin.name, issuer_id)
    kind = rng.choice(["article", "article", "author", "admin", "ca-new", "ca-challenge", "skip"])
    if kind == "admin":
        return [admin.data, ANCHOR.data]
    if kind == "author":
        return [author.data, admin.data, ANCHOR.data]
    if kind in ("ca-new", "ca-challenge"):
        tail = ["NEW", "req1"] if kind == "ca-new" else ["CHALLENGE", "req1", "r2"]
        if rng.random() < 0.2:
            tail = tail[:-1]
        pkt = sign_data(Name([site, "CA"] + tail), b"resp", admin_kp, admin.name)
        return [pkt, admin.data, ANCHOR.data]
    if kind == "skip":
        # an article signed straight by the admin
        pkt = sign_data(Name([site, "article", admin_name, "p1", "v=1"]), b"x", admin_kp, admin.name)
        return [pkt, admin.data, ANCHOR.data]
    version = _pick(rng, f"v={rng.randint(0, 9)}", ["1", "ver=2"], 0.2)
    writer = _pick(rng, author_name, ["bea" if author_name == "bob" else "bob"], 0.2)
    art = sign_data(Name([site, _pick(rng, "article", ["articles"], 0.05), writer, "post1", version]),
                    b"text", author_kp, author.name)
    return [art, author.data, admin.data, ANCHOR.data]
