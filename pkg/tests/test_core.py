"""Quote wire format, report-data commitment, and signature binding."""

import json
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqattest.core import (
    DEFAULT_QUOTE_SIZE,
    MAX_QUOTE_SIZE,
    MIN_QUOTE_SIZE,
    AttestationKeyType,
    Quote,
    QuoteEncodeError,
    QuoteHeader,
    QuoteParseError,
    QuoteParseErrorKind,
    QuoteVersion,
    ReportBody,
    SequencerMetadata,
    TcbStatus,
    canonical_signing_bytes,
    compute_report_data,
    parse_quote,
    serialize_quote,
    verify_quote_signature,
)
from seqattest.crypto import KeyPair, sha256

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def sample_metadata(**overrides) -> SequencerMetadata:
    fields = dict(
        block_hash=sha256(b"block"),
        block_height=7,
        state_root=sha256(b"root"),
        l1_origin=sha256(b"origin"),
        timestamp=1_700_000_050,
        nonce=3,
        prover_pubkey=KeyPair.from_seed(b"prover").public_bytes,
    )
    fields.update(overrides)
    return SequencerMetadata(**fields)


def signed_quote(meta=None, *, key=None, version=QuoteVersion.V3) -> Quote:
    meta = meta or sample_metadata()
    key = key or KeyPair.from_seed(b"attestation")
    header = QuoteHeader(version=version, qe_vendor_id=sha256(b"qe")[:16])
    body = ReportBody(
        mrenclave=sha256(b"code"),
        mrsigner=sha256(b"vendor"),
        isv_svn=2,
        tcb_status=TcbStatus.UP_TO_DATE,
        report_data=compute_report_data(meta),
    )
    signature = key.sign(canonical_signing_bytes(header, body, meta))
    return Quote(
        header=header,
        body=body,
        metadata=meta,
        collateral_ref="pck-000001",
        signature=signature,
    )


class TestReportData:
    def test_deterministic(self):
        meta = sample_metadata()
        assert compute_report_data(meta) == compute_report_data(meta)

    def test_single_field_change_changes_digest(self):
        meta = sample_metadata()
        base = compute_report_data(meta)
        assert compute_report_data(replace(meta, nonce=meta.nonce + 1)) != base
        assert compute_report_data(replace(meta, block_height=8)) != base
        assert compute_report_data(replace(meta, timestamp=meta.timestamp + 1)) != base
        assert compute_report_data(replace(meta, state_root=sha256(b"x"))) != base

    def test_golden_fixture(self):
        # Expected digest frozen from an independent reference
        # implementation of the length-prefixed layout.
        golden = json.loads((FIXTURES / "report_data_golden.json").read_text())
        m = golden["metadata"]
        meta = SequencerMetadata(
            block_hash=bytes.fromhex(m["block_hash"]),
            block_height=m["block_height"],
            state_root=bytes.fromhex(m["state_root"]),
            l1_origin=bytes.fromhex(m["l1_origin"]),
            timestamp=m["timestamp"],
            nonce=m["nonce"],
            prover_pubkey=bytes.fromhex(m["prover_pubkey"]),
        )
        assert compute_report_data(meta).hex() == golden["report_data"]
        assert (
            golden["report_data"]
            == "1890b4d8b04d805420aa260825219766b641674f9f09ffa9911b72f98020d535"
        )


class TestSerializeParse:
    def test_round_trip(self):
        quote = signed_quote()
        assert parse_quote(serialize_quote(quote)) == quote

    def test_minimal_quote_padded_to_floor(self):
        data = serialize_quote(signed_quote())
        assert len(data) >= MIN_QUOTE_SIZE
        assert len(data) == MIN_QUOTE_SIZE  # content is well under the floor

    def test_pad_target_is_exact(self):
        data = serialize_quote(signed_quote(), pad_to=4_096)
        assert len(data) == 4_096

    def test_default_target_constant(self):
        assert DEFAULT_QUOTE_SIZE == 4_096

    def test_pad_target_too_small_for_content(self):
        big_meta = sample_metadata(prover_pubkey=b"\x04" + b"\xab" * 700)
        with pytest.raises(QuoteEncodeError):
            serialize_quote(signed_quote(big_meta), pad_to=MIN_QUOTE_SIZE)

    def test_pad_target_above_max(self):
        with pytest.raises(QuoteEncodeError):
            serialize_quote(signed_quote(), pad_to=MAX_QUOTE_SIZE + 1)

    def test_unknown_version_first_byte(self):
        data = bytearray(serialize_quote(signed_quote()))
        data[0] = 5
        with pytest.raises(QuoteParseError) as exc:
            parse_quote(bytes(data))
        assert exc.value.kind is QuoteParseErrorKind.UNKNOWN_VERSION

    def test_single_version_byte_input(self):
        with pytest.raises(QuoteParseError) as exc:
            parse_quote(b"\x05")
        assert exc.value.kind is QuoteParseErrorKind.UNKNOWN_VERSION

    def test_truncated_by_one(self):
        data = serialize_quote(signed_quote())
        with pytest.raises(QuoteParseError) as exc:
            parse_quote(data[:-1])
        assert exc.value.kind is QuoteParseErrorKind.TRUNCATED

    def test_empty_input(self):
        with pytest.raises(QuoteParseError) as exc:
            parse_quote(b"")
        assert exc.value.kind is QuoteParseErrorKind.TRUNCATED

    def test_trailing_garbage(self):
        data = serialize_quote(signed_quote()) + b"\x00"
        with pytest.raises(QuoteParseError) as exc:
            parse_quote(data)
        assert exc.value.kind is QuoteParseErrorKind.BAD_LENGTH_PREFIX

    def test_bad_field_tcb_byte(self):
        data = bytearray(serialize_quote(signed_quote()))
        data[88] = 250
        with pytest.raises(QuoteParseError) as exc:
            parse_quote(bytes(data))
        assert exc.value.kind is QuoteParseErrorKind.BAD_FIELD

    def test_v3_and_v4_round_trip(self):
        for version in (QuoteVersion.V3, QuoteVersion.V4):
            quote = signed_quote(version=version)
            assert parse_quote(serialize_quote(quote)).header.version is version

    def test_golden_quote_fixture_parses(self):
        data = (FIXTURES / "quotes" / "honest.bin").read_bytes()
        quote = parse_quote(data)
        assert len(data) == 4_096
        assert quote.metadata.block_height == 1


class TestSignature:
    def test_valid_signature_verifies(self):
        key = KeyPair.from_seed(b"attestation")
        quote = signed_quote(key=key)
        assert verify_quote_signature(quote, key.public_bytes)

    def test_flipped_signature_byte_fails(self):
        key = KeyPair.from_seed(b"attestation")
        quote = signed_quote(key=key)
        bad = bytearray(quote.signature)
        bad[0] ^= 0x01
        assert not verify_quote_signature(replace(quote, signature=bytes(bad)), key.public_bytes)

    def test_wrong_key_fails(self):
        quote = signed_quote(key=KeyPair.from_seed(b"attestation"))
        other = KeyPair.from_seed(b"other")
        assert not verify_quote_signature(quote, other.public_bytes)

    def test_metadata_mutation_after_signing_fails(self):
        key = KeyPair.from_seed(b"attestation")
        quote = signed_quote(key=key)
        mutated = replace(quote, metadata=replace(quote.metadata, nonce=99))
        assert not verify_quote_signature(mutated, key.public_bytes)

    def test_signing_is_deterministic(self):
        key = KeyPair.from_seed(b"attestation")
        msg = b"same message"
        assert key.sign(msg) == key.sign(msg)


# ---------------------------------------------------------------------------
# property tests

digests = st.binary(min_size=32, max_size=32)
u64 = st.integers(min_value=0, max_value=2**64 - 1)


@st.composite
def metadata_strategy(draw):
    return SequencerMetadata(
        block_hash=draw(digests),
        block_height=draw(u64),
        state_root=draw(digests),
        l1_origin=draw(digests),
        timestamp=draw(u64),
        nonce=draw(u64),
        prover_pubkey=draw(st.binary(min_size=1, max_size=96)),
    )


@st.composite
def quote_strategy(draw):
    meta = draw(metadata_strategy())
    header = QuoteHeader(
        version=draw(st.sampled_from([QuoteVersion.V3, QuoteVersion.V4])),
        attestation_key_type=AttestationKeyType.ECDSA_P256_SIM,
        qe_vendor_id=draw(st.binary(min_size=16, max_size=16)),
    )
    body = ReportBody(
        mrenclave=draw(digests),
        mrsigner=draw(digests),
        isv_svn=draw(st.integers(min_value=0, max_value=0xFFFF)),
        tcb_status=draw(st.sampled_from(list(TcbStatus))),
        report_data=compute_report_data(meta),
    )
    return Quote(
        header=header,
        body=body,
        metadata=meta,
        collateral_ref=draw(st.text(alphabet="abcdef0123456789-", max_size=32)),
        signature=draw(st.binary(min_size=0, max_size=80)),
    )


@given(quote=quote_strategy(), pad=st.one_of(st.none(), st.integers(512, 10_240)))
@settings(max_examples=150)
def test_round_trip_property(quote, pad):
    data = serialize_quote(quote, pad_to=pad)
    assert MIN_QUOTE_SIZE <= len(data) <= MAX_QUOTE_SIZE
    assert parse_quote(data) == quote


@given(data=st.binary(max_size=65_536))
@settings(max_examples=400)
def test_parser_totality(data):
    # Never anything but the typed parse error, on inputs up to 64 KiB.
    try:
        parse_quote(data)
    except QuoteParseError:
        pass
