"""Deterministic simulator of a TEE-shielded rollup sequencer whose block
publication is gated by decentralized on-chain attestation."""

from .core import (
    CollateralBundle,
    PolicyView,
    Quote,
    QuoteHeader,
    QuoteVersion,
    ReportBody,
    SequencerMetadata,
    TcbStatus,
    compute_report_data,
    parse_quote,
    serialize_quote,
    verify_quote_signature,
)
from .enclave import Enclave, TamperMode, generate_quote, measure_and_boot, provision
from .gas import GasModel, verify_gas
from .metrics import MetricsReport, compute_metrics
from .onchain import (
    AttestationRecord,
    Ledger,
    RejectReason,
    RenewalRequest,
    SuiteParams,
    deploy_attestation_suite,
    is_authorized,
    submit_quote,
)
from .pcs import PcsService
from .replay import replay
from .scenario import AdversaryKind, ScenarioConfig
from .simnet import Simulation, run_scenario

__version__ = "0.1.0"
