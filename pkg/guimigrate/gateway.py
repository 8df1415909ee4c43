"""
This submodule assembles agent prompts, sends them to a completion backend and parses the
structured replies.

Two backends are provided: :class:`ScriptedBackend` replays a transcript file, which makes the whole
engine deterministic, and :class:`RemoteBackend` talks to an OpenAI-compatible chat-completions
endpoint.
"""

import base64
import json
import re
import time
from threading import Lock
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

from pydantic import ValidationError
import urllib3

from guimigrate.impl.http import HTTPFactory, _base_headers, send_request
from guimigrate.impl.raster import to_png
from guimigrate.impl.retry import RetryPolicy
from guimigrate.interfaces import VlmBackend
from guimigrate.model import Screenshot
from guimigrate.prompts import (
    CHAIN_OF_THOUGHT, INSTRUCTION, SECTION_ORDER, SECTION_TITLES, TEMPLATES, chain_of_thought_text,
    instruction_text
)
from guimigrate.schemas import AgentKind, validate_reply
from guimigrate.trace import TraceKind, TraceRecorder
from guimigrate.util import (
    MigrationError, UnsuccessfulResponseException, http_error_message, is_auth_failure, is_http_error_recoverable,
    log
)

CHAT_COMPLETIONS_PATH = '/chat/completions'

_FENCED_BLOCK = re.compile(r'```[ \t]*(?:json)?[ \t]*\r?\n(.*?)```', re.DOTALL | re.IGNORECASE)


class PromptAssemblyError(MigrationError):
    def __init__(self, agent_kind: str, section: str):
        super().__init__('%s prompt is missing required section %s' % (agent_kind, section))
        self.agent_kind = agent_kind
        self.section = section


class VlmGatewayError(MigrationError):
    """The remote endpoint could not be used; ``retry_count`` says how often it was retried."""
    def __init__(self, message: str, retry_count: int = 0):
        super().__init__('%s (after %d retries)' % (message, retry_count))
        self.retry_count = retry_count


class VlmAuthError(VlmGatewayError):
    pass


class ScriptedTranscriptError(MigrationError):
    pass


class ReplyParseError(MigrationError):
    """The reply has no fenced JSON block, or the block is malformed or breaks the agent's schema."""
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class ReplyValidationError(MigrationError):
    """The reply is well-formed but makes a decision the engine cannot accept."""
    def __init__(self, message: str, raw: str = ''):
        super().__init__(message)
        self.raw = raw


class PromptImage(NamedTuple):
    label: str
    caption: str
    screenshot: Screenshot


class PromptSection(NamedTuple):
    name: str
    text: str


class PromptBundle(NamedTuple):
    agent_kind: str
    sections: Tuple[PromptSection, ...]
    images: Tuple[PromptImage, ...]

    @property
    def section_names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.sections)

    def section(self, name: str) -> Optional[str]:
        for s in self.sections:
            if s.name == name:
                return s.text
        return None

    @property
    def text(self) -> str:
        return '\n\n'.join('## %s\n%s' % (SECTION_TITLES[s.name], s.text) for s in self.sections)


class VlmReply(NamedTuple):
    raw: str
    parsed: Any = None
    prompt_tokens: int = 0
    completion_tokens: int = 0


def assemble_prompt(agent_kind: str, context: Dict[str, Any], no_vision: bool = False,
                    requery_note: Optional[str] = None) -> PromptBundle:
    """Builds the prompt for one agent from its row of the component table.

    ``context`` maps section names to text and may carry ``images`` (a list of
    :class:`PromptImage`) and ``instruction_extra`` (text appended to the instruction).

    :raises PromptAssemblyError: naming the first required section or image set that is missing
    """
    template = TEMPLATES[agent_kind]
    texts = {}
    for name in template.context_sections:
        value = context.get(name)
        if value is None:
            raise PromptAssemblyError(agent_kind, name)
        texts[name] = value
    texts[CHAIN_OF_THOUGHT] = chain_of_thought_text(template)
    texts[INSTRUCTION] = instruction_text(template, context.get('instruction_extra'), requery_note)
    images = tuple(context.get('images') or ())
    if template.images is not None and tuple(i.label for i in images) != template.images:
        raise PromptAssemblyError(agent_kind, 'images (%s)' % ', '.join(template.images))
    sections = tuple(PromptSection(name, texts[name]) for name in SECTION_ORDER if name in texts)
    return PromptBundle(agent_kind, sections, () if no_vision else images)


def parse_structured_reply(reply: Any, agent_kind: str) -> Any:
    """Extracts the last fenced JSON block of a reply and validates it against the agent's schema.

    :param reply: a :class:`VlmReply` or the raw reply text
    :raises ReplyParseError: carrying the raw text
    """
    raw = reply.raw if isinstance(reply, VlmReply) else reply
    blocks = _FENCED_BLOCK.findall(raw)
    if not blocks:
        raise ReplyParseError('reply has no fenced JSON block', raw)
    try:
        document = json.loads(blocks[-1])
    except json.JSONDecodeError as e:
        raise ReplyParseError('reply block is not valid JSON: %s' % e, raw)
    try:
        return validate_reply(agent_kind, document)
    except ValidationError as e:
        problems = '; '.join('%s: %s' % ('.'.join(str(p) for p in err['loc']) or '$', err['msg'])
                             for err in e.errors())
        raise ReplyParseError('reply does not match the %s schema: %s' % (agent_kind, problems), raw)


class TranscriptEntry(NamedTuple):
    agent_kind: str
    contains: Optional[str]
    reply: str

    def accepts(self, bundle: PromptBundle) -> bool:
        if self.agent_kind != bundle.agent_kind:
            return False
        return self.contains is None or self.contains in bundle.text

    def describe(self) -> str:
        if self.contains is None:
            return self.agent_kind
        return '%s containing %r' % (self.agent_kind, self.contains)


def load_transcript(document: bytes) -> List[TranscriptEntry]:
    try:
        data = json.loads(document.decode('utf-8') if isinstance(document, (bytes, bytearray)) else document)
    except (ValueError, UnicodeDecodeError) as e:
        raise ScriptedTranscriptError('transcript is not valid JSON: %s' % e)
    if not isinstance(data, list):
        raise ScriptedTranscriptError('transcript must be a JSON array')
    entries = []
    for index, item in enumerate(data):
        try:
            match = item['match']
            kind = match['agent_kind']
            reply = item['reply']
        except (KeyError, TypeError):
            raise ScriptedTranscriptError('transcript entry %d must be {"match": {"agent_kind", "contains"?}, '
                                          '"reply"}' % index)
        if kind not in AgentKind.ALL or not isinstance(reply, str):
            raise ScriptedTranscriptError('transcript entry %d has unknown agent_kind %r or a non-string reply'
                                          % (index, kind))
        entries.append(TranscriptEntry(kind, match.get('contains'), reply))
    return entries


class ScriptedBackend(VlmBackend):
    """
    Replies from a transcript. Each call consumes the first unconsumed entry whose matcher accepts
    the prompt; entries it skips stay available. In strict mode only the first unconsumed entry is
    considered and a mismatch is an error.
    """
    def __init__(self, entries: List[TranscriptEntry], strict: bool = False, name: str = 'transcript'):
        self._entries = list(entries)
        self._consumed = [False] * len(self._entries)
        self._strict = strict
        self._name = name
        self._lock = Lock()

    @classmethod
    def from_file(cls, path: str, strict: bool = False) -> 'ScriptedBackend':
        with open(path, 'rb') as f:
            return cls(load_transcript(f.read()), strict=strict, name=path)

    @property
    def remaining(self) -> List[TranscriptEntry]:
        with self._lock:
            return [e for e, used in zip(self._entries, self._consumed) if not used]

    def complete(self, bundle: PromptBundle) -> VlmReply:
        with self._lock:
            pending = [i for i, used in enumerate(self._consumed) if not used]
            if not pending:
                raise ScriptedTranscriptError('%s exhausted: no entry left for a %s prompt'
                                              % (self._name, bundle.agent_kind))
            candidates = pending[:1] if self._strict else pending
            for i in candidates:
                if self._entries[i].accepts(bundle):
                    self._consumed[i] = True
                    return VlmReply(self._entries[i].reply)
            head = self._entries[pending[0]]
            raise ScriptedTranscriptError('%s has no entry for a %s prompt; expected entry %d (%s) next'
                                          % (self._name, bundle.agent_kind, pending[0], head.describe()))


class RemoteBackend(VlmBackend):
    """Chat completions over HTTP against an OpenAI-compatible endpoint."""
    def __init__(self, endpoint: str, api_key: Optional[str], model: str, http_config, temperature: float = 0,
                 seed: Optional[int] = None, max_retries: int = 3, sleep: Callable[[float], None] = time.sleep):
        endpoint = endpoint.rstrip('/')
        if not endpoint.endswith(CHAT_COMPLETIONS_PATH):
            endpoint += CHAT_COMPLETIONS_PATH
        self._uri = endpoint
        self._model = model
        self._temperature = temperature
        self._seed = seed
        self._max_retries = max_retries
        self._sleep = sleep
        self._factory = HTTPFactory(_base_headers(api_key), http_config)
        self._http = self._factory.create_pool_manager(4, self._uri)

    @property
    def uri(self) -> str:
        return self._uri

    def request_body(self, bundle: PromptBundle) -> Dict[str, Any]:
        content = [{'type': 'text', 'text': bundle.text}]  # type: List[Dict[str, Any]]
        for image in bundle.images:
            content.append({'type': 'text', 'text': '[%s] %s' % (image.label, image.caption)})
            content.append({'type': 'image_url', 'image_url': {'url': _data_url(image.screenshot)}})
        body = {'model': self._model, 'messages': [{'role': 'user', 'content': content}],
                'temperature': self._temperature}  # type: Dict[str, Any]
        if self._seed is not None:
            body['seed'] = self._seed
        return body

    def complete(self, bundle: PromptBundle) -> VlmReply:
        body = self.request_body(bundle)
        policy = RetryPolicy(self._max_retries, rand_seed=self._seed)
        while True:
            try:
                r = send_request(self._http, self._factory, 'POST', self._uri, body=body, retries=False)
                return _decode_completion(r.data, policy.retry_count)
            except UnsuccessfulResponseException as e:
                if is_auth_failure(e.status):
                    raise VlmAuthError(http_error_message(e.status, 'chat completion'), policy.retry_count)
                if not is_http_error_recoverable(e.status) or not policy.can_retry():
                    raise VlmGatewayError(http_error_message(e.status, 'chat completion', 'giving up'),
                                          policy.retry_count)
                log.warning(http_error_message(e.status, 'chat completion'))
            except urllib3.exceptions.HTTPError as e:
                if not policy.can_retry():
                    raise VlmGatewayError('chat completion endpoint unreachable: %s' % e, policy.retry_count)
                log.warning("Chat completion request failed, will retry: %s", e)
            self._sleep(policy.next_delay())


def _data_url(screenshot: Screenshot) -> str:
    return 'data:image/png;base64,' + base64.b64encode(to_png(screenshot)).decode('ascii')


def _decode_completion(data: bytes, retry_count: int) -> VlmReply:
    try:
        doc = json.loads(data.decode('utf-8'))
        raw = doc['choices'][0]['message']['content']
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise VlmGatewayError('malformed chat completion response: %s' % e, retry_count)
    usage = doc.get('usage') or {}
    return VlmReply(raw or '', prompt_tokens=int(usage.get('prompt_tokens', 0)),
                    completion_tokens=int(usage.get('completion_tokens', 0)))


class VlmGateway:
    """
    Asks one agent at a time: assembles the prompt, calls the backend, parses the reply and re-asks
    up to ``requery_budget`` times when the reply is malformed or fails the caller's check.

    Every call and reply is written to the trace. Safe for concurrent calls.
    """
    def __init__(self, backend: VlmBackend, requery_budget: int = 2, no_vision: bool = False,
                 trace: Optional[TraceRecorder] = None):
        self._backend = backend
        self._requery_budget = requery_budget
        self._no_vision = no_vision
        self._trace = trace
        self._lock = Lock()
        self._calls = {}  # type: Dict[str, int]

    @property
    def backend(self) -> VlmBackend:
        return self._backend

    @property
    def call_count(self) -> int:
        with self._lock:
            return sum(self._calls.values())

    def calls_for(self, agent_kind: str) -> int:
        with self._lock:
            return self._calls.get(agent_kind, 0)

    def ask(self, agent_kind: str, context: Dict[str, Any], check: Optional[Callable[[Any], Any]] = None) -> Any:
        """Returns the parsed decision, or what ``check`` returns for it when a check is given.

        ``check`` raises :class:`ReplyValidationError` to reject a well-formed reply.

        :raises ReplyParseError: or :class:`ReplyValidationError` once the re-query budget is spent
        """
        note = None
        error = None  # type: Optional[MigrationError]
        for attempt in range(1 + self._requery_budget):
            bundle = assemble_prompt(agent_kind, context, self._no_vision, note)
            reply = self.complete(bundle, attempt)
            try:
                parsed = parse_structured_reply(reply, agent_kind)
                return check(parsed) if check is not None else parsed
            except ReplyValidationError as e:
                e.raw = reply.raw
                error = e
            except ReplyParseError as e:
                error = e
            note = str(error)
            log.warning("Re-asking %s (attempt %d): %s", agent_kind, attempt + 1, note)
            self._record(TraceKind.REQUERY, {'agent_kind': agent_kind, 'attempt': attempt, 'reason': note})
        assert error is not None
        raise error

    def complete(self, bundle: PromptBundle, attempt: int = 0) -> VlmReply:
        self._record(TraceKind.VLM_CALL, {
            'agent_kind': bundle.agent_kind,
            'attempt': attempt,
            'sections': list(bundle.section_names),
            'images': [{'label': i.label, 'caption': i.caption} for i in bundle.images],
            'image_count': len(bundle.images)
        })
        log.debug("Asking %s with sections %s and %d images", bundle.agent_kind, bundle.section_names,
                  len(bundle.images))
        reply = self._backend.complete(bundle)
        with self._lock:
            self._calls[bundle.agent_kind] = self._calls.get(bundle.agent_kind, 0) + 1
        self._record(TraceKind.VLM_REPLY, {'agent_kind': bundle.agent_kind, 'raw': reply.raw,
                                           'prompt_tokens': reply.prompt_tokens,
                                           'completion_tokens': reply.completion_tokens})
        return reply

    def _record(self, kind: str, payload: Dict[str, Any]):
        if self._trace is not None:
            self._trace.record(kind, payload)
