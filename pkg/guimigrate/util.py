"""
General internal helper functions.
"""
# currently excluded from documentation - see docs/README.md

import json
import logging
from typing import Any

have_yaml = False
try:
    import yaml
    have_yaml = True
except ImportError:
    pass

log = logging.getLogger('guimigrate')


# 4xx statuses worth retrying; any other 4xx, 400 included, is permanent
_RETRYABLE_CLIENT_STATUSES = frozenset((408, 429))


class MigrationError(Exception):
    """Base class for all errors raised by the migration engine."""


class UnsuccessfulResponseException(MigrationError):
    def __init__(self, status: int):
        super().__init__("HTTP error %d" % status)
        self._status = status

    @property
    def status(self) -> int:
        return self._status


def throw_if_unsuccessful_response(resp):
    if resp.status >= 400:
        raise UnsuccessfulResponseException(resp.status)


def is_http_error_recoverable(status: int) -> bool:
    if 400 <= status < 500:
        return status in _RETRYABLE_CLIENT_STATUSES
    return True


def is_auth_failure(status: int) -> bool:
    return status in (401, 403)


def http_error_description(status: int) -> str:
    return "HTTP error %d%s" % (status, " (invalid credential)" if is_auth_failure(status) else "")


def http_error_message(status: int, context: str, retryable_message: str = "will retry") -> str:
    outcome = retryable_message if is_http_error_recoverable(status) else "giving up permanently"
    return "Received %s for %s - %s" % (http_error_description(status), context, outcome)


def json_dumps_stable(data) -> str:
    """Serializes with sorted keys and fixed separators so equal values give equal bytes."""
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def parse_document(text: str) -> Any:
    """Parses JSON, falling back to YAML when pyyaml is installed and the text is not JSON."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if not have_yaml:
            raise
    return yaml.safe_load(text)
