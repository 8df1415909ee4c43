import os

import mock
import pytest

from guimigrate.config import MigrationConfig
from guimigrate.gateway import RemoteBackend
from guimigrate.integrations import Devices, Gateways
from guimigrate.impl.app_model import AppModelError

from testing import fixtures


def test_simulated_device_from_model_file():
    device = Devices.simulated(os.path.join(fixtures.DATASET, fixtures.CATEGORY, 'tip_b', 'model.json'))
    assert device.model.app_id == 'tip_b'
    assert device.capture_page().sequence_no == 1


def test_simulated_device_rejects_bad_model(tmp_path):
    path = tmp_path / 'model.json'
    path.write_text('{"screen": {"w": 10, "h": 10}, "pages": {}}')
    with pytest.raises(AppModelError):
        Devices.simulated(str(path))


def test_scripted_gateway_from_file():
    backend = Gateways.scripted(fixtures.transcript_path('tip_a_to_b'))
    assert len(backend.remaining) == 11


def test_remote_gateway_needs_endpoint(monkeypatch):
    monkeypatch.delenv('VLM_ENDPOINT', raising=False)
    with pytest.raises(ValueError, match='VLM_ENDPOINT'):
        Gateways.remote(MigrationConfig())


def test_remote_gateway_reads_environment():
    env = {'VLM_ENDPOINT': 'http://localhost:9999/v1', 'VLM_API_KEY': 'k'}
    with mock.patch.dict(os.environ, env):
        backend = Gateways.remote(MigrationConfig())
    assert isinstance(backend, RemoteBackend)
    assert backend.uri == 'http://localhost:9999/v1/chat/completions'
