"""
This submodule contains the :class:`MigrationConfig` class for custom configuration of a migration
run, along with its nested :class:`HTTPConfig` and :class:`Toggles`.
"""

from typing import Any, Dict, List, Optional

from guimigrate.util import log, parse_document

GATEWAY_SCRIPTED = 'scripted'
GATEWAY_REMOTE = 'remote'
DEVICE_SIMULATED = 'simulated'
DEVICE_LIVE = 'live'

class HTTPConfig:
    """Advanced HTTP configuration options for the remote VLM endpoint and the live device bridge.

    This class groups together HTTP/HTTPS-related configuration properties that rarely need to be
    changed. If you need to set these, construct an ``HTTPConfig`` instance and pass it as the
    ``http`` parameter of :class:`MigrationConfig`.
    """
    def __init__(self,
                 connect_timeout: float=10,
                 read_timeout: float=120,
                 http_proxy: Optional[str]=None,
                 ca_certs: Optional[str]=None,
                 disable_ssl_verification: bool=False):
        """
        :param connect_timeout: The connect timeout for network connections in seconds.
        :param read_timeout: The read timeout for network connections in seconds. Completions with
          several images attached can take a while, hence the generous default.
        :param http_proxy: Use a proxy for all connections. This is the full URI of the proxy; for
          example: http://my-proxy.com:1234. It overrides any proxy named by the ``http_proxy`` or
          ``https_proxy`` environment variables.
        :param ca_certs: If using a custom certificate authority, set this to the file path of the
          certificate bundle.
        :param disable_ssl_verification: If true, completely disables SSL verification and certificate
          verification for secure requests. Only for local bridges with self-signed certificates.
        """
        self.__connect_timeout = connect_timeout
        self.__read_timeout = read_timeout
        self.__http_proxy = http_proxy
        self.__ca_certs = ca_certs
        self.__disable_ssl_verification = disable_ssl_verification

    @property
    def connect_timeout(self) -> float:
        return self.__connect_timeout

    @property
    def read_timeout(self) -> float:
        return self.__read_timeout

    @property
    def http_proxy(self) -> Optional[str]:
        return self.__http_proxy

    @property
    def ca_certs(self) -> Optional[str]:
        return self.__ca_certs

    @property
    def disable_ssl_verification(self) -> bool:
        return self.__disable_ssl_verification


class Toggles:
    """The ablation switches. Each one disables exactly one engine capability."""
    def __init__(self, no_vision: bool=False, no_analyzer: bool=False, no_feedback: bool=False):
        """
        :param no_vision: send no images to the VLM; pages are described by text only
        :param no_analyzer: skip step grouping and classification; every source action becomes a key step
        :param no_feedback: accept every executed action without asking the VLM
        """
        self.__no_vision = no_vision
        self.__no_analyzer = no_analyzer
        self.__no_feedback = no_feedback

    @property
    def no_vision(self) -> bool:
        return self.__no_vision

    @property
    def no_analyzer(self) -> bool:
        return self.__no_analyzer

    @property
    def no_feedback(self) -> bool:
        return self.__no_feedback

    @property
    def label(self) -> str:
        """The approach name used in benchmark reports, e.g. ``full`` or ``no-vision``."""
        names = [name for name, on in (('no-vision', self.__no_vision), ('no-analyzer', self.__no_analyzer),
                                       ('no-feedback', self.__no_feedback)) if on]
        return '+'.join(names) or 'full'

    def to_json(self) -> Dict[str, bool]:
        return {'no_vision': self.__no_vision, 'no_analyzer': self.__no_analyzer, 'no_feedback': self.__no_feedback}

    def __eq__(self, other) -> bool:
        return isinstance(other, Toggles) and self.to_json() == other.to_json()

    def __repr__(self) -> str:
        return 'Toggles(%s)' % self.label

    @staticmethod
    def ablation_variants() -> List['Toggles']:
        """The full configuration followed by each single-toggle variant."""
        return [Toggles(), Toggles(no_vision=True), Toggles(no_analyzer=True), Toggles(no_feedback=True)]


class MigrationConfig:
    """Advanced configuration options for a migration run.

    All budgets must be at least 1. Instances are read-only and may be shared between the threads
    of a benchmark run; use :func:`copy_with` to derive a variant.
    """
    def __init__(self,
                 max_iterations: int=25,
                 max_rejections_per_iteration: int=5,
                 reflection_threshold: int=3,
                 prune_budget: int=60,
                 requery_budget: int=2,
                 toggles: Optional[Toggles]=None,
                 model: str='gpt-4o',
                 gateway: str=GATEWAY_SCRIPTED,
                 device: str=DEVICE_SIMULATED,
                 temperature: float=0,
                 remote_max_retries: int=3,
                 seed: Optional[int]=None,
                 jobs: int=1,
                 repeat: int=1,
                 http: Optional[HTTPConfig]=None):
        """
        :param max_iterations: the most exploration iterations a migration may use; one iteration is
          a completeness check followed by attempts until one action is accepted
        :param max_rejections_per_iteration: the most rejected candidates within one iteration
        :param reflection_threshold: consecutive rejections that trigger a test-level reflection
        :param prune_budget: the most hierarchy nodes kept in a pruned page
        :param requery_budget: how many times a malformed or invalid VLM reply is re-asked before
          giving up
        :param toggles: the ablation switches; defaults to the full engine
        :param model: the model name sent to the remote endpoint
        :param gateway: ``scripted`` or ``remote``
        :param device: ``simulated`` or ``live``
        :param temperature: sampling temperature for the remote endpoint
        :param remote_max_retries: retries for recoverable HTTP failures of the remote endpoint
        :param seed: when set, runs use a logical clock and seeded jitter so traces and reports are
          byte-reproducible; the seed is also sent to the remote endpoint
        :param jobs: the most benchmark tasks run at once
        :param repeat: how many times the benchmark runs every task
        :param http: optional properties for customizing HTTP connections
        """
        self.__max_iterations = max_iterations
        self.__max_rejections_per_iteration = max_rejections_per_iteration
        self.__reflection_threshold = reflection_threshold
        self.__prune_budget = prune_budget
        self.__requery_budget = requery_budget
        self.__toggles = toggles or Toggles()
        self.__model = model
        self.__gateway = gateway
        self.__device = device
        self.__temperature = temperature
        self.__remote_max_retries = remote_max_retries
        self.__seed = seed
        self.__jobs = jobs
        self.__repeat = repeat
        self.__http = http or HTTPConfig()
        self._validate()

    @classmethod
    def default(cls) -> 'MigrationConfig':
        return cls()

    @classmethod
    def from_file(cls, path: str) -> 'MigrationConfig':
        """Loads a configuration from a JSON or YAML mapping of constructor parameter names.

        ``toggles`` and ``http`` are nested mappings.

        :raises ValueError: for unknown keys or out-of-range values
        """
        with open(path, 'r', encoding='utf-8') as f:
            content = f.read()
        data = parse_document(content)
        return cls.from_dict(data or {})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MigrationConfig':
        if not isinstance(data, dict):
            raise ValueError('configuration must be a mapping')
        known = set(_CONFIG_KEYS)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError('unknown configuration keys: %s' % ', '.join(unknown))
        kwargs = dict(data)
        if 'toggles' in kwargs:
            kwargs['toggles'] = _nested(Toggles, kwargs['toggles'], 'toggles')
        if 'http' in kwargs:
            kwargs['http'] = _nested(HTTPConfig, kwargs['http'], 'http')
        return cls(**kwargs)

    def copy_with(self, **changes) -> 'MigrationConfig':
        """Returns a new ``MigrationConfig`` that is the same as this one except for the given parameters."""
        kwargs = {name: getattr(self, name) for name in _CONFIG_KEYS}
        kwargs.update(changes)
        return MigrationConfig(**kwargs)

    @property
    def max_iterations(self) -> int:
        return self.__max_iterations

    @property
    def max_rejections_per_iteration(self) -> int:
        return self.__max_rejections_per_iteration

    @property
    def reflection_threshold(self) -> int:
        return self.__reflection_threshold

    @property
    def prune_budget(self) -> int:
        return self.__prune_budget

    @property
    def requery_budget(self) -> int:
        return self.__requery_budget

    @property
    def toggles(self) -> Toggles:
        return self.__toggles

    @property
    def model(self) -> str:
        return self.__model

    @property
    def gateway(self) -> str:
        return self.__gateway

    @property
    def device(self) -> str:
        return self.__device

    @property
    def temperature(self) -> float:
        return self.__temperature

    @property
    def remote_max_retries(self) -> int:
        return self.__remote_max_retries

    @property
    def seed(self) -> Optional[int]:
        return self.__seed

    @property
    def jobs(self) -> int:
        return self.__jobs

    @property
    def repeat(self) -> int:
        return self.__repeat

    @property
    def http(self) -> HTTPConfig:
        return self.__http

    def _validate(self):
        for name in ('max_iterations', 'max_rejections_per_iteration', 'reflection_threshold', 'prune_budget',
                     'requery_budget', 'jobs', 'repeat'):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError('%s must be an integer >= 1, got %r' % (name, value))
        if self.__remote_max_retries < 0:
            raise ValueError('remote_max_retries must be >= 0')
        if self.__gateway not in (GATEWAY_SCRIPTED, GATEWAY_REMOTE):
            raise ValueError('gateway must be %r or %r, got %r' % (GATEWAY_SCRIPTED, GATEWAY_REMOTE, self.__gateway))
        if self.__device not in (DEVICE_SIMULATED, DEVICE_LIVE):
            raise ValueError('device must be %r or %r, got %r' % (DEVICE_SIMULATED, DEVICE_LIVE, self.__device))
        if self.__reflection_threshold > self.__max_rejections_per_iteration:
            log.warning("reflection_threshold (%d) exceeds max_rejections_per_iteration (%d); "
                        "reflection will never trigger from rejections",
                        self.__reflection_threshold, self.__max_rejections_per_iteration)


_CONFIG_KEYS = ('max_iterations', 'max_rejections_per_iteration', 'reflection_threshold', 'prune_budget',
                'requery_budget', 'toggles', 'model', 'gateway', 'device', 'temperature', 'remote_max_retries',
                'seed', 'jobs', 'repeat', 'http')


def _nested(cls, value, name):
    if isinstance(value, cls):
        return value
    if not isinstance(value, dict):
        raise ValueError('%s must be a mapping' % name)
    try:
        return cls(**value)
    except TypeError as e:
        raise ValueError('invalid %s settings: %s' % (name, e))
