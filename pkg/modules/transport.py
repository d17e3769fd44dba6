"""
Transport Module
Newline-delimited JSON client for an out-of-process generator, over a child
process's standard streams or HTTP POST
"""

import json
import logging
import queue
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from config import RETRY_STATUS_CODES
from modules.errors import ProtocolError, TransportError, UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationRequest:
    id: int
    source: str


@dataclass(frozen=True)
class GenerationResponse:
    id: int
    hypothesis: str


def encode_request(request):
    return json.dumps({"id": request.id, "source": request.source}, ensure_ascii=False, separators=(",", ":"))


def encode_response(response):
    return json.dumps({"id": response.id, "hypothesis": response.hypothesis},
                      ensure_ascii=False, separators=(",", ":"))


def decode_response(line):
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"response line is not JSON: {line[:80]!r} ({e})")
    if not isinstance(data, dict) or not isinstance(data.get("id"), int) \
            or not isinstance(data.get("hypothesis"), str):
        raise ProtocolError(f"response needs an integer 'id' and a string 'hypothesis': {line[:80]!r}")
    return GenerationResponse(id=data["id"], hypothesis=data["hypothesis"])


def match_responses(batch, responses):
    """
    Order responses like the batch

    Raises:
        ProtocolError naming the first unknown, duplicate or missing id
    """
    pending = {request.id for request in batch}
    by_id = {}
    for response in responses:
        if response.id in by_id:
            raise ProtocolError(f"duplicate response for id {response.id}", response.id)
        if response.id not in pending:
            raise ProtocolError(f"response for unknown id {response.id}", response.id)
        by_id[response.id] = response
    for request in batch:
        if request.id not in by_id:
            raise ProtocolError(f"no response for id {request.id}", request.id)
    return [by_id[request.id] for request in batch]


class HttpTransport:
    """One batch per POST body; transient failures retried with backoff by urllib3"""

    concurrent = True

    def __init__(self, cfg):
        if not cfg.url:
            raise UsageError("http transport needs a url")
        self.url = cfg.url
        self.timeout = cfg.timeout
        self.session = requests.Session()
        retries = Retry(
            total=cfg.max_retries,
            backoff_factor=cfg.backoff,
            status_forcelist=RETRY_STATUS_CODES,
            allowed_methods=frozenset(["POST"]),
            raise_on_status=True,
        )
        adapter = HTTPAdapter(max_retries=retries)
        self.session.mount("http://", adapter)
        self.session.mount("https://", adapter)

    def exchange(self, batch):
        body = "".join(encode_request(r) + "\n" for r in batch).encode("utf-8")
        try:
            response = self.session.post(
                self.url, data=body, timeout=self.timeout,
                headers={"Content-Type": "application/x-ndjson; charset=utf-8"},
            )
            response.raise_for_status()
        except requests.exceptions.RequestException as e:
            raise TransportError(f"POST {self.url} failed: {e}")
        lines = response.content.decode("utf-8").split("\n")
        return [decode_response(line) for line in lines if line.strip()]

    def close(self):
        self.session.close()


class StdioTransport:
    """Talks to a child process; the child is restarted after a transient failure"""

    concurrent = False

    def __init__(self, cfg):
        if not cfg.command:
            raise UsageError("stdio transport needs a command")
        self.command = list(cfg.command)
        self.timeout = cfg.timeout
        self.max_retries = cfg.max_retries
        self.backoff = cfg.backoff
        self.process = None
        self.lines = None

    def _start(self):
        try:
            self.process = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                encoding="utf-8", bufsize=1,
            )
        except OSError as e:
            raise TransportError(f"cannot start generator {self.command[0]!r}: {e}")
        self.lines = queue.Queue()
        threading.Thread(target=self._pump, args=(self.process, self.lines), daemon=True).start()

    @staticmethod
    def _pump(process, lines):
        for line in process.stdout:
            lines.put(line)
        lines.put(None)

    def _exchange_once(self, batch):
        if self.process is None or self.process.poll() is not None:
            self._start()
        try:
            for request in batch:
                self.process.stdin.write(encode_request(request) + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise TransportError(f"generator process stopped accepting input: {e}")

        responses, deadline = [], time.monotonic() + self.timeout
        while len(responses) < len(batch):
            remaining = deadline - time.monotonic()
            try:
                line = self.lines.get(timeout=max(remaining, 0.0))
            except queue.Empty:
                if responses:
                    # the child answered part of the batch, then went quiet
                    return responses
                raise TransportError(f"generator process timed out after {self.timeout}s")
            if line is None:
                raise TransportError("generator process exited")
            if line.strip():
                responses.append(decode_response(line))
        return responses

    def exchange(self, batch):
        for attempt in range(self.max_retries + 1):
            try:
                return self._exchange_once(batch)
            except ProtocolError:
                raise
            except TransportError as e:
                self.close()
                if attempt == self.max_retries:
                    raise TransportError(f"{e} (gave up after {attempt + 1} attempts)")
                delay = self.backoff * (2 ** attempt)
                logger.warning("generator exchange failed (%s); retrying in %.2fs", e, delay)
                time.sleep(delay)

    def close(self):
        if self.process is not None:
            try:
                self.process.stdin.close()
            except OSError:
                pass
            self.process.terminate()
            self.process.wait(timeout=5)
            self.process = None


def open_transport(cfg):
    return HttpTransport(cfg) if cfg.kind == "http" else StdioTransport(cfg)


def remote_generate(requests_batch, cfg, transport=None):
    """
    Send requests to the generator and return responses in request order

    Requests go out in batches of cfg.batch_size, with up to cfg.window
    batches in flight when the transport allows it.

    Args:
        requests_batch: non-empty list of GenerationRequest with unique ids
        cfg: TransportConfig
        transport: an open transport to reuse; one is opened and closed otherwise

    Raises:
        ProtocolError for missing, duplicate or unknown ids
        TransportError when retries are exhausted
    """
    requests_batch = list(requests_batch)
    if not requests_batch:
        raise UsageError("remote_generate needs at least one request")
    ids = [r.id for r in requests_batch]
    if len(set(ids)) != len(ids):
        raise UsageError("request ids must be unique")

    owned = transport is None
    transport = transport or open_transport(cfg)
    batches = [requests_batch[k:k + cfg.batch_size] for k in range(0, len(requests_batch), cfg.batch_size)]
    try:
        if transport.concurrent and cfg.window > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=cfg.window) as executor:
                answered = list(executor.map(transport.exchange, batches))
        else:
            answered = [transport.exchange(batch) for batch in batches]
    finally:
        if owned:
            transport.close()

    ordered = []
    for batch, responses in zip(batches, answered):
        ordered.extend(match_responses(batch, responses))
    return ordered
