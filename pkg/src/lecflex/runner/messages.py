"""Wire format for the DSO / LEC boundary.

One record per line::

    record  := "LFX" version TAB kind TAB sender TAB iteration TAB payload
    payload := canonical JSON object (sorted keys, no whitespace)

Floats are written with 9 significant digits and always carry a decimal point
or exponent, so ints and floats survive a round trip. Message construction
quantises floats to the same precision, which makes ``decode(encode(m)) == m``
exact. Only PCC-level quantities appear in payloads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

PROTOCOL_VERSION = 1
MAGIC = "LFX"

# required payload keys per kind; nothing else may appear
PAYLOAD_KEYS = {
    "BaselineSubmission": ("costs", "lec", "p", "q"),
    "FlexSignal": ("deviation_cap", "directions", "hours", "lec", "pcc", "prices"),
    "FlexBid": ("flex_max", "hours", "lec", "objective", "operating_cost"),
    "AllocationNotice": ("accepted", "deviation_cap", "directions", "hours", "lec", "prices"),
    "CommitmentSubmission": ("costs", "flexibility", "lec", "p", "q", "revenue"),
    "SettlementNotice": ("cost_delta", "lec", "revenue"),
}


class MessageError(ValueError):
    pass


class VersionMismatchError(MessageError):
    pass


class MalformedRecordError(MessageError):
    pass


class PayloadKindError(MessageError):
    pass


def quantize(value):
    """Round floats (recursively) to 9 significant digits."""
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise MessageError(f"non-finite number {value!r} in payload")
        return float(format(value, ".9g"))
    if isinstance(value, dict):
        return {str(k): quantize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [quantize(v) for v in value]
    if hasattr(value, "item"):
        return quantize(value.item())
    raise MessageError(f"unsupported payload value {value!r}")


def _dump(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = format(value, ".9g")
        if not any(c in text for c in ".en"):
            text += ".0"
        return text
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, list):
        return "[" + ",".join(_dump(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(json.dumps(k, ensure_ascii=True) + ":" + _dump(value[k]) for k in sorted(value)) + "}"
    raise MessageError(f"unsupported payload value {value!r}")


def canonical_json(value) -> str:
    return _dump(quantize(value))


def _check_payload(kind: str, payload: dict):
    if kind not in PAYLOAD_KEYS:
        raise PayloadKindError(f"unknown message kind {kind!r}")
    if not isinstance(payload, dict):
        raise PayloadKindError(f"{kind} payload must be an object")
    if tuple(sorted(payload)) != PAYLOAD_KEYS[kind]:
        raise PayloadKindError(f"{kind} payload keys {sorted(payload)} do not match {list(PAYLOAD_KEYS[kind])}")


@dataclass(frozen=True)
class Message:
    kind: str
    sender: str
    iteration: int
    payload: dict
    version: int = PROTOCOL_VERSION

    def __post_init__(self):
        _check_payload(self.kind, self.payload)
        if any(c in self.sender for c in "\t\n\r"):
            raise MessageError("sender may not contain tabs or newlines")
        object.__setattr__(self, "payload", quantize(self.payload))


def encode_message(message: Message) -> str:
    """Single-line record without the trailing newline."""
    return "\t".join([f"{MAGIC}{message.version}", message.kind, message.sender, str(int(message.iteration)),
                      _dump(message.payload)])


def decode_message(record: str) -> Message:
    record = record.rstrip("\n")
    parts = record.split("\t")
    if len(parts) != 5 or not parts[0].startswith(MAGIC):
        raise MalformedRecordError("malformed record")
    try:
        version = int(parts[0][len(MAGIC):])
    except ValueError:
        raise MalformedRecordError("malformed record: bad version field") from None
    if version != PROTOCOL_VERSION:
        raise VersionMismatchError(f"protocol version {version} (expected {PROTOCOL_VERSION})")
    kind, sender, iteration, body = parts[1:]
    try:
        it = int(iteration)
        payload = json.loads(body)
    except (ValueError, json.JSONDecodeError):
        raise MalformedRecordError("malformed record: bad iteration or payload") from None
    if kind not in PAYLOAD_KEYS:
        raise PayloadKindError(f"unknown message kind {kind!r}")
    return Message(kind, sender, it, payload, version)
