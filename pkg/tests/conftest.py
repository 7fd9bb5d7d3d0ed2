from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from vidqg.corpus import Corpus, GroundTruthQuestion, VideoRecord, load_corpus
from vidqg.embed import LocalHashEmbedding
from vidqg.harness import GenerationRecord
from vidqg.textproc import classify_output

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_corpus_path() -> Path:
    return FIXTURES / "corpus.json"


@pytest.fixture
def fixture_corpus(fixture_corpus_path) -> Corpus:
    return load_corpus(fixture_corpus_path)


@pytest.fixture
def provider() -> LocalHashEmbedding:
    return LocalHashEmbedding()


def make_question(text="What is this?", qtype="open", useful=True, options=None):
    return GroundTruthQuestion(text=text, qtype=qtype, useful=useful, options=options)


def make_video(
    video_id="v1",
    source="khan",
    domain=None,
    duration=60.0,
    transcript="One sentence. Another sentence.",
    questions=(),
):
    return VideoRecord(
        id=video_id,
        source=source,
        domain=domain,
        duration_seconds=duration,
        transcript=transcript,
        media_ref=None,
        questions=tuple(questions),
    )


def make_record(
    video_id="v1",
    model="mock",
    mode=1,
    iteration=1,
    raw_output="What is gravity?",
):
    return GenerationRecord(
        video_id=video_id,
        model=model,
        mode=mode,
        iteration=iteration,
        raw_output=raw_output,
        output_class=classify_output(raw_output).value,
        request_digest="0" * 64,
        timestamp="2026-01-01T00:00:00+00:00",
    )


_DOMAIN_SENTENCES = {
    "math": [
        "Fractions describe parts of a whole.",
        "Multiplying two negatives gives a positive.",
        "A derivative measures instantaneous change.",
    ],
    "science": [
        "Cells divide to repair damaged tissue.",
        "Light bends when it enters water.",
        "Plates drift slowly across the mantle.",
    ],
    "computing": [
        "A loop repeats instructions until a condition fails.",
        "Hash tables trade memory for constant lookups.",
        "Recursion solves problems by self-reference.",
    ],
    "economics-finance-domain": [
        "Prices rise when demand outpaces supply.",
        "Compound interest grows savings exponentially.",
        "Inflation erodes the value of idle cash.",
    ],
}


def make_icd_corpus() -> Corpus:
    """12 khan videos, 3 per allowed domain, distinct transcripts."""
    videos = []
    for domain, sentences in _DOMAIN_SENTENCES.items():
        for k in range(3):
            vid = f"{domain[:4]}-{k}"
            transcript = " ".join(sentences[k:] + sentences[:k]) + f" Episode {k} recap."
            videos.append(
                make_video(
                    video_id=vid,
                    domain=domain,
                    transcript=transcript,
                    questions=(
                        make_question(f"What does episode {k} of {domain} explain?"),
                        make_question(f"Why does the {domain} example {k} work?"),
                    ),
                )
            )
    return Corpus(videos=tuple(videos))


class StubServer:
    """Tiny threaded HTTP server; respond(path, body) -> (status, payload)."""

    def __init__(self, respond):
        self.respond = respond
        self.requests: list[tuple[str, dict]] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b"{}"
                body = json.loads(raw or b"{}")
                outer.requests.append((self.path, body))
                status, payload = outer.respond(self.path, body)
                data = json.dumps(payload).encode() if payload is not None else b""
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def base_url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    servers: list[StubServer] = []

    def make(respond) -> StubServer:
        server = StubServer(respond)
        servers.append(server)
        return server

    yield make
    for server in servers:
        server.close()
