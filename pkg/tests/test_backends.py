from __future__ import annotations

import base64
import hashlib
import json
import multiprocessing
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from convosynth.audio import clip_to_wav_bytes, pcm16_bytes
from convosynth.backends.base import (
    BackendConfig,
    BackendError,
    BackendTimeoutError,
    ChatRequest,
    HTTPStatusError,
    StructuredOutputError,
    TokenBucket,
    TransportError,
    VoicePrompt,
    retry_delays,
    with_retries,
)
from convosynth.backends.http import AsrHttpBackend, ChatHttpBackend, MosHttpBackend
from convosynth.backends.mock import (
    MockBackendSuite,
    MockChatBackend,
    clip_key,
)
from convosynth.backends.structured import chat_complete_structured, extract_json
from conftest import make_clip

TOY_SCHEMA = {
    "title": "toy",
    "type": "object",
    "properties": {"value": {"type": "integer"}},
    "required": ["value"],
    "additionalProperties": False,
}


def voice_prompt(seed=0):
    return VoicePrompt(voice_id="v-test", clip=make_clip(1.2, 16000, seed), transcript="hi there")


def test_chat_request_preconditions():
    with pytest.raises(ValueError):
        ChatRequest(system_prompt="s", user_prompt="   ")
    with pytest.raises(ValueError):
        ChatRequest(system_prompt="", user_prompt="u")
    with pytest.raises(ValueError):
        ChatRequest(system_prompt="s", user_prompt="u", temperature=3.0)
    with pytest.raises(ValueError):
        ChatRequest(system_prompt="s", user_prompt="u", max_output_tokens=0)


def test_mock_chat_deterministic():
    request = ChatRequest(system_prompt="sys", user_prompt="prompt P")
    a = MockChatBackend(seed=7).complete(request)
    b = MockChatBackend(seed=7).complete(request)
    assert a == b
    assert MockChatBackend(seed=8).complete(request) != a


def _mock_digest(queue):
    suite = MockBackendSuite(seed=21)
    text = suite.chat.complete(ChatRequest(system_prompt="s", user_prompt="cross-process probe"))
    clip = suite.tts.synthesize("hello across processes", voice_prompt(3))
    digest = hashlib.sha256()
    digest.update(text.encode())
    digest.update(pcm16_bytes(clip))
    digest.update(suite.embedder.embed(clip).tobytes())
    digest.update(str(suite.mos.score(clip)).encode())
    queue.put(digest.hexdigest())


def test_mock_outputs_identical_across_processes():
    context = multiprocessing.get_context("spawn")
    queue = context.Queue()
    process = context.Process(target=_mock_digest, args=(queue,))
    process.start()
    child = queue.get(timeout=60)
    process.join(timeout=60)
    local_queue = []

    class _Q:
        def put(self, item):
            local_queue.append(item)

    _mock_digest(_Q())
    assert child == local_queue[0]


def test_extract_json_variants():
    assert extract_json('{"a": 1}') == {"a": 1}
    assert extract_json('```json\n{"a": 1}\n```') == {"a": 1}
    assert extract_json('noise before {"a": [1, 2]} noise after') == {"a": [1, 2]}
    with pytest.raises(json.JSONDecodeError):
        extract_json("no json here")


def test_structured_success_first_attempt():
    chat = MockChatBackend(seed=0)
    chat.queue_response('{"value": 3}')
    request = ChatRequest(system_prompt="s", user_prompt="u", schema=TOY_SCHEMA)
    value, attempts = chat_complete_structured(chat, request, max_retries=2)
    assert value == {"value": 3} and attempts == 1


def test_structured_recovers_after_one_malformed():
    chat = MockChatBackend(seed=0)
    chat.queue_response("definitely not json")
    chat.queue_response('{"value": 9}')
    request = ChatRequest(system_prompt="s", user_prompt="u", schema=TOY_SCHEMA)
    value, attempts = chat_complete_structured(chat, request, max_retries=2)
    assert value == {"value": 9} and attempts == 2
    # the repair prompt carries the previous error and raw text
    assert "previous response" in chat.calls[1].user_prompt.lower()


def test_structured_fails_after_retries():
    chat = MockChatBackend(seed=0)
    chat.always_malformed = True
    request = ChatRequest(system_prompt="s", user_prompt="u", schema=TOY_SCHEMA)
    with pytest.raises(StructuredOutputError) as excinfo:
        chat_complete_structured(chat, request, max_retries=2)
    assert excinfo.value.attempts == 3
    assert "not valid json" in excinfo.value.raw_text
    assert chat.call_count == 3


def test_structured_requires_schema():
    chat = MockChatBackend(seed=0)
    with pytest.raises(ValueError):
        chat_complete_structured(chat, ChatRequest(system_prompt="s", user_prompt="u"))


def test_mock_tts_duration_rule():
    suite = MockBackendSuite(seed=0)
    ten_words = "one two three four five six seven eight nine ten"
    clip = suite.tts.synthesize(ten_words, voice_prompt())
    assert clip.sample_rate == 24000
    assert len(clip) == round(0.8 * 24000)
    short = suite.tts.synthesize("hi", voice_prompt())
    assert len(short) == round(0.5 * 24000)


def test_mock_tts_preconditions():
    suite = MockBackendSuite(seed=0)
    with pytest.raises(ValueError):
        suite.tts.synthesize("   ", voice_prompt())
    too_short = VoicePrompt(voice_id="v", clip=make_clip(0.5, 16000), transcript="x")
    with pytest.raises(ValueError):
        suite.tts.synthesize("hello", too_short)


def test_mock_tts_deterministic():
    a = MockBackendSuite(seed=4).tts.synthesize("hello world", voice_prompt())
    b = MockBackendSuite(seed=4).tts.synthesize("hello world", voice_prompt())
    assert np.array_equal(a.samples, b.samples)


def test_mock_asr_registry():
    suite = MockBackendSuite(seed=0)
    clip = suite.tts.synthesize("hello there", voice_prompt())
    assert suite.asr.transcribe(clip, "en") == "hello there"
    unknown = make_clip(0.6, 24000, seed=9)
    assert suite.asr.transcribe(unknown, "en") == ""
    assert suite.asr.unregistered_keys == [clip_key(unknown)]
    with pytest.raises(ValueError):
        suite.asr.transcribe(make_clip(0.0, 16000), "en")
    suite.asr.register(unknown, "manual text")
    assert suite.asr.transcribe(unknown, "en") == "manual text"


def test_mock_mos_contract():
    suite = MockBackendSuite(seed=0)
    clip = make_clip(0.5, 16000, seed=5)
    first = suite.mos.score(clip)
    assert first == suite.mos.score(clip)
    assert 1.0 <= first <= 5.0
    for seed in range(20):
        assert 1.0 <= suite.mos.score(make_clip(0.3, 16000, seed=seed)) <= 5.0
    with pytest.raises(ValueError):
        suite.mos.score(make_clip(0.05, 16000))


def test_mock_embedder_contract():
    suite = MockBackendSuite(seed=0)
    prompt = voice_prompt()
    clip_a = suite.tts.synthesize("first utterance from this speaker", prompt)
    clip_b = suite.tts.synthesize("second utterance same speaker", prompt)
    emb_a1 = suite.embedder.embed(clip_a)
    emb_a2 = suite.embedder.embed(clip_a)
    assert np.array_equal(emb_a1, emb_a2)
    assert emb_a1.shape == (16,)
    cos = float(np.dot(emb_a1, suite.embedder.embed(clip_b)))
    assert cos >= 0.99
    with pytest.raises(ValueError):
        suite.embedder.embed(make_clip(0.2, 16000))


def test_retry_delays_monotonic():
    delays = list(retry_delays(6, base_seconds=0.5))
    assert delays == sorted(delays)
    assert all(d <= 30.0 for d in delays)


def test_with_retries_counts_and_delays():
    sleeps = []
    calls = []

    def failing():
        calls.append(1)
        raise TransportError("nope")

    with pytest.raises(TransportError):
        with_retries(failing, max_retries=3, retry_on=(TransportError,), sleep=sleeps.append)
    assert len(calls) == 4  # 1 + max_retries
    assert sleeps == sorted(sleeps) and len(sleeps) == 3


def test_token_bucket_blocks_until_refill():
    now = [0.0]
    sleeps = []

    def clock():
        return now[0]

    def sleep(duration):
        sleeps.append(duration)
        now[0] += duration

    bucket = TokenBucket(rate=2.0, capacity=1.0, clock=clock, sleep=sleep)
    bucket.acquire()
    bucket.acquire()
    assert sleeps == [pytest.approx(0.5)]


class _ScriptedHandler(BaseHTTPRequestHandler):
    script = []
    requests = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        type(self).requests.append((self.path, body, dict(self.headers)))
        status, payload = type(self).script.pop(0) if type(self).script else (200, {})
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def scripted_server():
    _ScriptedHandler.script = []
    _ScriptedHandler.requests = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _ScriptedHandler
    server.shutdown()


def test_chat_http_payload_and_parse(scripted_server):
    url, handler = scripted_server
    handler.script.append(
        (200, {"choices": [{"message": {"content": "hi from the model"}}]})
    )
    backend = ChatHttpBackend(
        BackendConfig(endpoint_url=url, model_name="test-model", auth_token="tok"),
        sleep=lambda s: None,
    )
    request = ChatRequest(system_prompt="sys", user_prompt="usr", schema=TOY_SCHEMA)
    assert backend.complete(request) == "hi from the model"
    path, body, headers = handler.requests[0]
    assert path == "/chat/completions"
    assert body["model"] == "test-model"
    assert body["messages"][0] == {"role": "system", "content": "sys"}
    assert body["response_format"]["json_schema"]["name"] == "toy"
    assert headers["Authorization"] == "Bearer tok"


def test_chat_http_retries_on_5xx(scripted_server):
    url, handler = scripted_server
    handler.script.append((500, {"error": "boom"}))
    handler.script.append((200, {"choices": [{"message": {"content": "recovered"}}]}))
    backend = ChatHttpBackend(
        BackendConfig(endpoint_url=url, model_name="m", max_retries=2), sleep=lambda s: None
    )
    assert backend.complete(ChatRequest(system_prompt="s", user_prompt="u")) == "recovered"
    assert len(handler.requests) == 2


def test_chat_http_4xx_not_retried(scripted_server):
    url, handler = scripted_server
    handler.script.append((404, {"error": "missing"}))
    backend = ChatHttpBackend(
        BackendConfig(endpoint_url=url, model_name="m", max_retries=3), sleep=lambda s: None
    )
    with pytest.raises(HTTPStatusError) as excinfo:
        backend.complete(ChatRequest(system_prompt="s", user_prompt="u"))
    assert excinfo.value.status_code == 404
    assert len(handler.requests) == 1


def test_transport_error_after_retries():
    backend = ChatHttpBackend(
        BackendConfig(endpoint_url="http://127.0.0.1:9", model_name="m", max_retries=1),
        sleep=lambda s: None,
    )
    with pytest.raises(TransportError):
        backend.complete(ChatRequest(system_prompt="s", user_prompt="u"))


def test_timeout_distinguishable():
    class SlowHandler(BaseHTTPRequestHandler):
        def do_POST(self):
            import time as _time

            _time.sleep(0.5)
            self.send_response(200)
            self.send_header("Content-Length", "2")
            self.end_headers()
            self.wfile.write(b"{}")

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), SlowHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        backend = ChatHttpBackend(
            BackendConfig(
                endpoint_url=f"http://127.0.0.1:{server.server_port}",
                model_name="m",
                timeout_seconds=0.1,
                max_retries=0,
            ),
            sleep=lambda s: None,
        )
        with pytest.raises(BackendTimeoutError):
            backend.complete(ChatRequest(system_prompt="s", user_prompt="u"))
    finally:
        server.shutdown()


def test_asr_and_mos_http(scripted_server):
    url, handler = scripted_server
    handler.script.append((200, {"text": "hello"}))
    handler.script.append((200, {"mos": 4.2}))
    clip = make_clip(0.5, 16000)
    asr = AsrHttpBackend(BackendConfig(endpoint_url=url), sleep=lambda s: None)
    assert asr.transcribe(clip, "en") == "hello"
    sent = handler.requests[0][1]
    assert sent["language"] == "en"
    assert base64.b64decode(sent["audio_wav_base64"]) == clip_to_wav_bytes(clip)
    mos = MosHttpBackend(BackendConfig(endpoint_url=url), sleep=lambda s: None)
    assert mos.score(clip) == pytest.approx(4.2)


def test_mos_http_rejects_out_of_range(scripted_server):
    url, handler = scripted_server
    handler.script.append((200, {"mos": 9.0}))
    mos = MosHttpBackend(BackendConfig(endpoint_url=url), sleep=lambda s: None)
    with pytest.raises(BackendError):
        mos.score(make_clip(0.5, 16000))
