"""
Implementation details of the configuration block written into benchmark reports.
"""
# currently excluded from documentation - see docs/README.md

import platform
from typing import Any, Dict

from guimigrate.config import MigrationConfig
from guimigrate.version import VERSION

ENGINE_NAME = 'gui-test-migrator'


def describe_configuration(config: MigrationConfig) -> Dict[str, Any]:
    return {'settings': _create_config_object(config),
            'engine': _create_engine_object(),
            'platform': _create_platform_object()}


def _create_config_object(config: MigrationConfig) -> Dict[str, Any]:
    default_config = MigrationConfig.default()
    return {'maxIterations': config.max_iterations,
            'maxRejectionsPerIteration': config.max_rejections_per_iteration,
            'reflectionThreshold': config.reflection_threshold,
            'pruneBudget': config.prune_budget,
            'requeryBudget': config.requery_budget,
            'model': config.model,
            'customModel': config.model != default_config.model,
            'gateway': config.gateway,
            'device': config.device,
            'temperature': config.temperature,
            'seeded': config.seed is not None,
            'jobs': config.jobs,
            'repeat': config.repeat,
            'connectTimeoutMillis': config.http.connect_timeout * 1000,
            'socketTimeoutMillis': config.http.read_timeout * 1000,
            'usingProxy': config.http.http_proxy is not None}


def _create_engine_object() -> Dict[str, str]:
    return {'name': ENGINE_NAME,
            'version': VERSION}


def _create_platform_object() -> Dict[str, str]:
    return {'name': 'python',
            'osArch': platform.machine(),
            'osName': _normalize_os_name(platform.system()),
            'osVersion': platform.release(),
            'pythonVersion': platform.python_version(),
            'pythonImplementation': platform.python_implementation()}


def _normalize_os_name(name):
    if name == 'Darwin':
        return 'MacOS'
    # Python already returns 'Linux' or 'Windows' for Linux or Windows, which is what we want
    return name
