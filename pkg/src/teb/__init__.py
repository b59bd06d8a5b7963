"""Trust-domain entity bootstrapping over a simulated named-data network.

Subpackages and modules:

* :mod:`teb.names`, :mod:`teb.packets`   names, Interest/Data, certificates
* :mod:`teb.crypto`                      signatures, AEAD, DH, PAKE
* :mod:`teb.schema`                      trust schema language and validation
* :mod:`teb.core`                        bootstrapping artifacts and the procedure executor
* :mod:`teb.simnet`                      deterministic forwarder and out-of-band channels
* :mod:`teb.protocols`                   SSP, testbed NDNCERT, NDNViber, PION, DCT bundles
* :mod:`teb.tib`                         trust information base, access control, key cache
* :mod:`teb.scenario`, :mod:`teb.cli`    scenario runner and ``teb`` command
"""

from .core import (
    BootstrapSession,
    Procedure,
    execute,
    is_valid_ordering,
    run_procedure,
    valid_orderings,
)
from .domain import Controller, Node
from .names import Name
from .packets import Certificate, Data, Interest
from .schema import TrustSchema, match, parse_schema, validate_chain
from .simnet import Network, OobKind
from .tib import AccessManager, KeyChain, Tib, ValidatedKeyCache

__version__ = "0.1.0"

__all__ = [
    "AccessManager",
    "BootstrapSession",
    "Certificate",
    "Controller",
    "Data",
    "Interest",
    "KeyChain",
    "Name",
    "Network",
    "Node",
    "OobKind",
    "Procedure",
    "Tib",
    "TrustSchema",
    "ValidatedKeyCache",
    "execute",
    "is_valid_ordering",
    "match",
    "parse_schema",
    "run_procedure",
    "valid_orderings",
    "validate_chain",
]
