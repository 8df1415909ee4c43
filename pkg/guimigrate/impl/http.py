"""
Shared HTTP plumbing for the remote VLM endpoint and the live device bridge.
"""
# currently excluded from documentation - see docs/README.md

import json
from os import environ
from typing import Any, Dict, Optional

import certifi
import urllib3

from guimigrate.util import throw_if_unsuccessful_response
from guimigrate.version import VERSION


def _base_headers(api_key: Optional[str] = None) -> Dict[str, str]:
    headers = {'User-Agent': 'GuiMigrate/' + VERSION, 'Content-Type': 'application/json'}
    if api_key:
        headers['Authorization'] = 'Bearer ' + api_key
    return headers


def _proxy_from_environment(uri: Optional[str]) -> Optional[str]:
    if uri is None:
        return None
    return environ.get('https_proxy' if uri.startswith('https:') else 'http_proxy')


class HTTPFactory:
    """Builds urllib3 pool managers from an :class:`~guimigrate.config.HTTPConfig`.

    The proxy is taken from the config, else from ``http_proxy``/``https_proxy`` matching the
    target's scheme. Credentials in the proxy URL become a basic-auth proxy header.
    """
    def __init__(self, base_headers: Dict[str, str], http_config, override_read_timeout: Optional[float] = None):
        self.__base_headers = base_headers
        self.__http_config = http_config
        read = http_config.read_timeout if override_read_timeout is None else override_read_timeout
        self.__timeout = urllib3.Timeout(connect=http_config.connect_timeout, read=read)

    @property
    def base_headers(self) -> Dict[str, str]:
        return self.__base_headers

    @property
    def timeout(self) -> urllib3.Timeout:
        return self.__timeout

    def _tls_options(self) -> Dict[str, Any]:
        config = self.__http_config
        if config.disable_ssl_verification:
            return {'cert_reqs': 'CERT_NONE', 'ca_certs': None}
        return {'cert_reqs': 'CERT_REQUIRED', 'ca_certs': config.ca_certs or certifi.where()}

    def create_pool_manager(self, num_pools: int, target_base_uri: Optional[str]) -> urllib3.PoolManager:
        options = dict(self._tls_options(), num_pools=num_pools)
        proxy_url = self.__http_config.http_proxy or _proxy_from_environment(target_base_uri)
        if not proxy_url:
            return urllib3.PoolManager(**options)
        auth = urllib3.util.parse_url(proxy_url).auth
        if auth is not None:
            options['proxy_headers'] = urllib3.util.make_headers(proxy_basic_auth=auth)
        return urllib3.ProxyManager(proxy_url, **options)


def send_request(http, factory: HTTPFactory, method: str, uri: str, body: Any = None,
                 extra_headers: Optional[Dict[str, str]] = None, retries: Any = 1):
    """Issues one request with the factory's headers and timeout; ``body`` is sent as JSON.

    :raises UnsuccessfulResponseException: for any status >= 400
    """
    headers = dict(factory.base_headers, **(extra_headers or {}))
    payload = None if body is None else json.dumps(body).encode('utf-8')
    r = http.request(method, uri, headers=headers, body=payload, timeout=factory.timeout, retries=retries)
    throw_if_unsuccessful_response(r)
    return r
