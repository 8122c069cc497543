"""Privacy-preserving, incentivised delivery of IoT software updates.

A vendor escrows a reward in a ProofOfDelivery contract.  A transmission node
earns it by presenting an attribute-based signature made by a device (which
proves some qualifying device received the update without saying which one)
plus a DAPS signature whose pairing with an earlier one leaks the node's
decryption key to the device's gateway.

Modules, bottom up: ``pairing_algebra``, ``access_policy``, ``oabs``,
``daps``, ``payload_crypto``, ``ledger_sim``, ``protocol_actors``,
``runner`` and ``cli``.
"""

from .access_policy import AccessStructure, AttributeSet, policy_to_lsss
from .daps import daps_extract, daps_kgen, daps_sign, daps_verify, session_address
from .ledger_sim import ContractState, Ledger, Transaction
from .oabs import oabs_keygen, oabs_setup, oabs_sign, oabs_sign_out, oabs_verify
from .payload_crypto import decrypt, encrypt, ledger_keygen, ledger_sign, ledger_verify
from .protocol_actors import ADVERSARIES, Device, Gateway, Trace, TransmissionNode, Vendor, run_delivery, update_id
from .runner import RunReport, ScenarioConfig, bench_sign, keygen_demo, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AccessStructure", "AttributeSet", "policy_to_lsss",
    "daps_extract", "daps_kgen", "daps_sign", "daps_verify", "session_address",
    "ContractState", "Ledger", "Transaction",
    "oabs_keygen", "oabs_setup", "oabs_sign", "oabs_sign_out", "oabs_verify",
    "decrypt", "encrypt", "ledger_keygen", "ledger_sign", "ledger_verify",
    "ADVERSARIES", "Device", "Gateway", "Trace", "TransmissionNode", "Vendor",
    "run_delivery", "update_id",
    "RunReport", "ScenarioConfig", "bench_sign", "keygen_demo", "run_scenario",
]
