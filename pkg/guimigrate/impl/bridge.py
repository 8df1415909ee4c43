"""
Thin client for a device automation bridge.

Wire contract, relative to the bridge base URI:

- ``GET /hierarchy`` returns a UIAutomator-compatible XML dump of the foreground window
- ``GET /screenshot`` returns PNG bytes
- ``POST /input`` injects one gesture: ``{"kind": "tap"|"long_tap"|"swipe"|"set_text"|"key_event"|"wait",
  "x": int, "y": int, "direction": str, "text": str, "key": str, "ms": int}`` (fields as applicable)
- ``POST /reset`` with ``{"app_id": str}`` force-stops and relaunches the app
"""
# currently excluded from documentation - see docs/README.md

from typing import Any, Dict

from guimigrate.impl.http import HTTPFactory, _base_headers, send_request
from guimigrate.util import log

HIERARCHY_PATH = '/hierarchy'
SCREENSHOT_PATH = '/screenshot'
INPUT_PATH = '/input'
RESET_PATH = '/reset'


class BridgeClient:
    """
    Issues bridge requests. Transport failures surface as ``urllib3`` exceptions and HTTP error
    statuses as :class:`guimigrate.util.UnsuccessfulResponseException`; callers translate both.
    """
    def __init__(self, base_uri: str, http_config):
        self._base_uri = base_uri.rstrip('/')
        self._factory = HTTPFactory(_base_headers(), http_config)
        self._http = self._factory.create_pool_manager(1, self._base_uri)

    @property
    def base_uri(self) -> str:
        return self._base_uri

    def hierarchy(self) -> bytes:
        return self._get(HIERARCHY_PATH)

    def screenshot(self) -> bytes:
        return self._get(SCREENSHOT_PATH)

    def inject(self, gesture: Dict[str, Any]):
        log.debug("Bridge input: %s", gesture)
        send_request(self._http, self._factory, 'POST', self._base_uri + INPUT_PATH, body=gesture)

    def reset(self, app_id: str):
        send_request(self._http, self._factory, 'POST', self._base_uri + RESET_PATH, body={'app_id': app_id})

    def close(self):
        self._http.clear()

    def _get(self, path: str) -> bytes:
        r = send_request(self._http, self._factory, 'GET', self._base_uri + path)
        return r.data
