"""Workflow orchestration, the DSO / LEC message boundary, reports and CLI."""

from .messages import (MAGIC, PAYLOAD_KEYS, PROTOCOL_VERSION, MalformedRecordError, Message, MessageError,
                       PayloadKindError, VersionMismatchError, canonical_json, decode_message, encode_message,
                       quantize)
from .pipeline import MarketOutcome, RunConfig, StageError, run_market, run_scenario
from .reports import (REPORT_FILES, TRACE_HEADER, allocation_header, render_reports, settlement_header,
                      write_reports)
from .transport import InProcessTransport, LECAgent, SocketTransport, TransportError, make_transport

__all__ = [
    "InProcessTransport", "LECAgent", "MAGIC", "MalformedRecordError", "MarketOutcome", "Message",
    "MessageError", "PAYLOAD_KEYS", "PROTOCOL_VERSION", "PayloadKindError", "REPORT_FILES", "RunConfig",
    "SocketTransport", "StageError", "TRACE_HEADER", "TransportError", "VersionMismatchError",
    "allocation_header", "canonical_json", "decode_message", "encode_message", "make_transport", "quantize",
    "render_reports", "run_market", "run_scenario", "settlement_header", "write_reports",
]
