"""Trust schema language, matching, chain validation, naming and templates."""

from .language import (
    EqLiteral,
    Literal,
    Rest,
    Rule,
    RuleRef,
    SchemaMode,
    TrustSchema,
    Variable,
    VersionType,
    Wildcard,
    parse_rules,
    parse_schema,
)
from .matching import TrustState, ValidationReport, licensed_pairs, match, validate_chain
from .naming import (
    NameConv,
    NameRegistry,
    UniquenessSuffix,
    assigned_names,
    convert_name,
    device_convention,
    email_convention,
    ssh_convention,
)
from .templates import (
    define_access_control,
    define_anchor,
    define_minimal_trust_zone,
    define_ndncert,
    define_schema_updates,
    define_versioned_data,
    define_zone,
    derive_cert,
)

VERSEC_EXAMPLE = '''\
#KEY: "KEY"/_/_/_
#site: "lvs-test"
#article: #site/"article"/author/post/_version & {_version: $eq_type("v=0")} <= #author
#author: #site/"author"/author/"KEY"/_/admin/_ <= #admin
#admin: #site/"admin"/admin/#KEY <= #root
#root: #site/#KEY
'''

NDNCERT_RULES = '''\
#newResponse: #site/"CA"/"NEW"/_ <= #admin
#challengeResponse: #site/"CA"/"CHALLENGE"/_/_ <= #admin
'''
