"""
This submodule contains factory methods for the pluggable components of a migration run: the device
a test executes on and the backend that answers VLM prompts.
"""

from os import environ
from typing import Optional

from guimigrate.config import HTTPConfig, MigrationConfig
from guimigrate.device import LiveDevice, SimulatedDevice
from guimigrate.gateway import RemoteBackend, ScriptedBackend
from guimigrate.impl.app_model import load_app_model
from guimigrate.impl.bridge import BridgeClient

ENV_VLM_ENDPOINT = 'VLM_ENDPOINT'
ENV_VLM_API_KEY = 'VLM_API_KEY'

DEFAULT_BRIDGE_URI = 'http://localhost:7912'


class Devices:
    """Provides factory methods for device sessions."""

    @staticmethod
    def simulated(model_path: str, app_id: str = '') -> SimulatedDevice:
        """Creates a simulator session over an app model file.

        ::

            from guimigrate.integrations import Devices
            target = Devices.simulated('apps/tip_b/model.json')

        :param model_path: path of the app model JSON document
        :param app_id: overrides the model's own ``app_id`` when the document has none
        :raises AppModelError: if the model is malformed or has dangling references
        """
        with open(model_path, 'rb') as f:
            return SimulatedDevice(load_app_model(f.read(), app_id))

    @staticmethod
    def live(app_id: str, bridge_uri: Optional[str] = None, http: Optional[HTTPConfig] = None) -> LiveDevice:
        """Creates a session on a real device reachable through an automation bridge.

        :param app_id: the package launched on reset
        :param bridge_uri: the bridge base URI; defaults to ``http://localhost:7912``
        :param http: optional HTTP settings for the bridge connection
        """
        return LiveDevice(BridgeClient(bridge_uri or DEFAULT_BRIDGE_URI, http or HTTPConfig()), app_id)


class Gateways:
    """Provides factory methods for VLM backends."""

    @staticmethod
    def scripted(transcript_path: str, strict: bool = False) -> ScriptedBackend:
        """Creates a backend that replays a transcript file of ``{"match", "reply"}`` entries.

        :param strict: when true, entries must be consumed in file order
        """
        return ScriptedBackend.from_file(transcript_path, strict)

    @staticmethod
    def remote(config: MigrationConfig, endpoint: Optional[str] = None,
               api_key: Optional[str] = None) -> RemoteBackend:
        """Creates a backend for an OpenAI-compatible chat completions endpoint.

        The endpoint and key default to the ``VLM_ENDPOINT`` and ``VLM_API_KEY`` environment
        variables.

        :raises ValueError: if no endpoint is given or set in the environment
        """
        endpoint = endpoint or environ.get(ENV_VLM_ENDPOINT)
        if not endpoint:
            raise ValueError('the remote gateway needs an endpoint; set %s' % ENV_VLM_ENDPOINT)
        return RemoteBackend(endpoint, api_key or environ.get(ENV_VLM_API_KEY), config.model, config.http,
                             temperature=config.temperature, seed=config.seed,
                             max_retries=config.remote_max_retries)
