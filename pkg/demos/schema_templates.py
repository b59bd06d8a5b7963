"""
Writing a trust schema with templates
=====================================

The same policy written by hand and assembled from template functions; both
give the same verdict on a batch of generated certificate chains.
"""

from teb import Name, crypto
from teb.packets import make_certificate, self_signed, sign_data
from teb.schema import (
    NDNCERT_RULES, VERSEC_EXAMPLE, define_anchor, define_ndncert, define_versioned_data,
    define_zone, derive_cert, match, parse_schema, validate_chain,
)

by_hand = parse_schema(VERSEC_EXAMPLE + NDNCERT_RULES)

s = define_zone("lvs-test")
s = define_anchor(s)
s = derive_cert(s, '"admin"/admin', from_rule="root")
s = derive_cert(s, '"author"/author', from_rule="admin")
s = define_versioned_data(s, '"article"/author/post', signed_by="author")
templated = define_ndncert(s, issuer="admin")

print(templated.to_text())

print("which rule does a name match?")
for n in ("/lvs-test/article/bob/hello/v=2", "/lvs-test/article/bob/hello/2", "/lvs-test/admin/amy/KEY/1a2b/root/v=1"):
    print(f"  {n:42} {[rid for rid, _ in match(templated, Name(n))]}")

anchor_kp = crypto.keygen(b"anchor")
anchor = self_signed(Name("/lvs-test"), anchor_kp)
admin_kp, author_kp = crypto.keygen(b"amy"), crypto.keygen(b"bob")
admin = make_certificate(Name("/lvs-test/admin/amy"), admin_kp.public, anchor_kp, anchor.name, "root")
author = make_certificate(Name("/lvs-test/author/bob"), author_kp.public, admin_kp, admin.name, "amy")

good = sign_data(Name("/lvs-test/article/bob/hello/v=2"), b"...", author_kp, author.name)
# an admin may certify authors but not write articles
bad = sign_data(Name("/lvs-test/article/amy/hello/v=2"), b"...", admin_kp, admin.name)

for label, chain in (("author signs article", [good, author.data, admin.data, anchor.data]),
                     ("admin signs article", [bad, admin.data, anchor.data])):
    r1, r2 = validate_chain(by_hand, anchor, chain), validate_chain(templated, anchor, chain)
    print(f"{label:22} hand-written={bool(r1)} templated={bool(r2)}  {r1.reason or ' -> '.join(r1.rule_path)}")
