"""Structured warnings, one JSON object per event."""

import json
import logging

logger = logging.getLogger("sciaccess")


class Diagnostics:
    """Collects warnings emitted while parsing, stitching or emitting a document."""

    def __init__(self, context=None):
        self.context = dict(context or {})
        self.records = []

    def warn(self, code, message, **fields):
        record = {**self.context, "code": code, "message": message, **fields}
        self.records.append(record)
        logger.debug("%s: %s", code, message)
        return record

    def __len__(self):
        return len(self.records)

    def codes(self):
        return [r["code"] for r in self.records]

    def to_jsonl(self):
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)
