import json

from guimigrate.config import HTTPConfig, MigrationConfig
from guimigrate.diagnostics import _create_config_object, describe_configuration


def test_describe_configuration():
    test_config = MigrationConfig(seed=1)
    described = describe_configuration(test_config)
    assert len(described) == 3
    assert described['engine']['name'] == 'gui-test-migrator'
    assert described['engine']['version']

    assert len(described['platform']) == 6
    assert described['platform']['name'] == 'python'
    assert all(x in described['platform'].keys() for x in ['osArch', 'osName', 'osVersion', 'pythonVersion', 'pythonImplementation'])

    assert described['settings'] == _create_config_object(test_config)

    # Verify converts to json without failure
    json.dumps(described)

def test_create_config_object_defaults():
    settings = _create_config_object(MigrationConfig())

    assert len(settings) == 16
    assert settings['maxIterations'] == 25
    assert settings['maxRejectionsPerIteration'] == 5
    assert settings['reflectionThreshold'] == 3
    assert settings['customModel'] is False
    assert settings['seeded'] is False
    assert settings['connectTimeoutMillis'] == 10000
    assert settings['socketTimeoutMillis'] == 120000
    assert settings['usingProxy'] is False

def test_create_config_object_custom():
    settings = _create_config_object(MigrationConfig(model='local-vlm', seed=4, jobs=3,
                                                     http=HTTPConfig(http_proxy='http://proxy')))
    assert settings['customModel'] is True
    assert settings['model'] == 'local-vlm'
    assert settings['seeded'] is True
    assert settings['jobs'] == 3
    assert settings['usingProxy'] is True
