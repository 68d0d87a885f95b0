"""Distribution protocols: TAN accounting and chained signed containers."""

from superdist.protocol.accounting import (
    AccountingService,
    TanRecord,
    as_purchase,
    tan_file_name,
    tan_from_file_name,
    write_tan_records,
)
from superdist.protocol.container import (
    LicenceEntry,
    SignedContainer,
    VerifyReport,
    decode_container,
    encode_container,
    package,
    verify,
    verify_chain,
)
from superdist.protocol.crypto import CryptoSuite, Ed25519Suite, HashSuite, KeyPair
from superdist.protocol.device import CompliantDevice, resell
from superdist.protocol.harness import Harness, paradiso_session, potato_session
from superdist.protocol.receipts import (
    Receipt,
    RewardingService,
    issue_receipt,
    redeem,
    write_receipts,
)

__all__ = [
    "AccountingService",
    "CompliantDevice",
    "CryptoSuite",
    "Ed25519Suite",
    "Harness",
    "HashSuite",
    "KeyPair",
    "LicenceEntry",
    "Receipt",
    "RewardingService",
    "SignedContainer",
    "TanRecord",
    "VerifyReport",
    "as_purchase",
    "decode_container",
    "encode_container",
    "issue_receipt",
    "package",
    "paradiso_session",
    "potato_session",
    "redeem",
    "resell",
    "tan_file_name",
    "tan_from_file_name",
    "verify",
    "verify_chain",
    "write_receipts",
    "write_tan_records",
]
