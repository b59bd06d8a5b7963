"""The bootstrapping protocols, each as five pluggable procedures."""

from .common import DeviceDriver, ProtocolBundle, ProtocolName, digest_name
from .dct import DctController, DctDevice, dct_bundle_run, open_bundle
from .dct import PREFERRED_ORDER as _DCT_ORDER
from .ndncert import (
    DeviceIdChallenge,
    EmailPinChallenge,
    NdncertCa,
    NdncertClient,
    PossessionChallenge,
)
from .ndnviber import PREFERRED_ORDER as _VIBER_ORDER
from .ndnviber import ViberController, ViberDevice, ndnviber_run
from .pion import PREFERRED_ORDER as _PION_ORDER
from .pion import PionAuthenticator, PionController, PionDevice, pion_run
from .ssp import PREFERRED_ORDER as _SSP_ORDER
from .ssp import QrCode, SspController, SspDevice, sign_on_params, ssp_run
from .testbed import PREFERRED_ORDER as _TESTBED_ORDER
from .testbed import TestbedCa, TestbedUser, publish_trust, testbed_run, testbed_schema

PROTOCOLS = {
    b.name: b
    for b in (
        ProtocolBundle(ProtocolName.SSP, SspDevice.required_cac, SspDevice.required_eac,
                       _SSP_ORDER, True, ssp_run),
        ProtocolBundle(ProtocolName.TESTBED_NDNCERT, TestbedUser.required_cac, TestbedUser.required_eac,
                       _TESTBED_ORDER, False, testbed_run),
        ProtocolBundle(ProtocolName.NDNVIBER, ViberDevice.required_cac, ViberDevice.required_eac,
                       _VIBER_ORDER, False, ndnviber_run),
        ProtocolBundle(ProtocolName.PION, PionDevice.required_cac, PionDevice.required_eac,
                       _PION_ORDER, False, pion_run),
        ProtocolBundle(ProtocolName.DCT_BUNDLE, DctDevice.required_cac, DctDevice.required_eac,
                       _DCT_ORDER, True, dct_bundle_run),
    )
}
