"""Buyer/seller exchange: the buyer shares the encoder spec and sampling
parameters, each seller samples a uniform subset, encodes, clips, noises,
summarizes, and returns (mean, covariance, count).

Frames are a 4-byte big-endian payload length followed by canonical JSON
(keys sorted, compact separators, floats as shortest round-trip decimals).
The exchange is strict lockstep: every message the buyer sends gets exactly
one reply. MODEL_SPEC is acknowledged with HELLO so transcripts stay
deterministic and byte-countable.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import json
import logging
import math
import secrets
import socket
import socketserver
import struct

import numpy as np

from .encoder import EncoderSpec, RawDataset, encode
from .errors import (
    FrameError,
    InsufficientSamplesError,
    NotPSDError,
    NumericInputError,
    ParameterError,
    ProtocolFailure,
    ShapeError,
)
from .gaussian_geometry import GaussianSummary
from .privacy import (
    PrivacyBudget,
    apply_gaussian_mechanism,
    calibrate_sigma,
    derive_seed,
    secure_seed,
)
from .stats import EmbeddingSet, clip_to_ball, summarize

log = logging.getLogger("priarta.protocol")

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 64 * 1024 * 1024
_HEADER = struct.Struct(">I")

MODE_SECURE = "secure"
MODE_SEEDED = "seeded"


def _require_str(value, field: str) -> str:
    if not isinstance(value, str):
        raise ParameterError(f"{field} must be a string")
    return value


def _require_int(value, field: str, minimum: int = 0) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ParameterError(f"{field} must be an integer >= {minimum}")
    return value


def _require_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{field} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{field} must be finite")
    return value


def _float_tuple(values, field: str) -> tuple:
    if not isinstance(values, (list, tuple)):
        raise ParameterError(f"{field} must be a sequence of numbers")
    return tuple(_require_float(v, field) for v in values)


@dataclass(frozen=True)
class Hello:
    protocol_version: int

    def __post_init__(self):
        object.__setattr__(
            self, "protocol_version", _require_int(self.protocol_version, "protocol_version", 1)
        )


@dataclass(frozen=True)
class ModelSpec:
    encoder: EncoderSpec

    def __post_init__(self):
        if not isinstance(self.encoder, EncoderSpec):
            raise ParameterError("encoder must be an EncoderSpec")


@dataclass(frozen=True)
class StatsRequest:
    subset_size: int
    epsilon: float
    delta: float
    clip_radius: float
    session_id: str
    mode: str
    seed: int = None

    def __post_init__(self):
        # Structural checks only: out-of-range privacy parameters must still
        # transport, so the seller can answer INVALID_PARAMETER.
        object.__setattr__(self, "subset_size", _require_int(self.subset_size, "subset_size", 1))
        for field in ("epsilon", "delta", "clip_radius"):
            object.__setattr__(self, field, _require_float(getattr(self, field), field))
        _require_str(self.session_id, "session_id")
        if self.mode == MODE_SEEDED:
            object.__setattr__(self, "seed", _require_int(self.seed, "seed", 0))
        elif self.mode == MODE_SECURE:
            if self.seed is not None:
                raise ParameterError("secure mode carries no seed")
        else:
            raise ParameterError(f"mode must be {MODE_SECURE!r} or {MODE_SEEDED!r}")


@dataclass(frozen=True)
class StatsResponse:
    mean: tuple
    covariance: tuple
    count: int
    session_id: str
    sigma_used: float
    encoder_fingerprint: str

    def __post_init__(self):
        mean = _float_tuple(self.mean, "mean")
        if not mean:
            raise ParameterError("mean must be nonempty")
        covariance = _float_tuple(self.covariance, "covariance")
        d = len(mean)
        if len(covariance) != d * (d + 1) // 2:
            raise ParameterError(
                f"covariance carries {len(covariance)} entries, "
                f"expected d(d+1)/2 = {d * (d + 1) // 2} for d = {d}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)
        object.__setattr__(self, "count", _require_int(self.count, "count", 1))
        _require_str(self.session_id, "session_id")
        object.__setattr__(self, "sigma_used", _require_float(self.sigma_used, "sigma_used"))
        _require_str(self.encoder_fingerprint, "encoder_fingerprint")


@dataclass(frozen=True)
class ErrorMessage:
    code: str
    message: str
    session_id: str

    def __post_init__(self):
        if not _require_str(self.code, "code"):
            raise ParameterError("code must be nonempty")
        _require_str(self.message, "message")
        _require_str(self.session_id, "session_id")


def message_to_dict(msg) -> dict:
    if isinstance(msg, Hello):
        return {"type": "HELLO", "protocol_version": msg.protocol_version}
    if isinstance(msg, ModelSpec):
        return {"type": "MODEL_SPEC", "encoder": msg.encoder.to_dict()}
    if isinstance(msg, StatsRequest):
        out = {
            "type": "STATS_REQUEST",
            "subset_size": msg.subset_size,
            "epsilon": msg.epsilon,
            "delta": msg.delta,
            "clip_radius": msg.clip_radius,
            "session_id": msg.session_id,
            "mode": msg.mode,
        }
        if msg.mode == MODE_SEEDED:
            out["seed"] = msg.seed
        return out
    if isinstance(msg, StatsResponse):
        return {
            "type": "STATS_RESPONSE",
            "mean": list(msg.mean),
            "covariance": list(msg.covariance),
            "count": msg.count,
            "session_id": msg.session_id,
            "sigma_used": msg.sigma_used,
            "encoder_fingerprint": msg.encoder_fingerprint,
        }
    if isinstance(msg, ErrorMessage):
        return {
            "type": "ERROR",
            "code": msg.code,
            "message": msg.message,
            "session_id": msg.session_id,
        }
    raise ParameterError(f"not a protocol message: {type(msg).__name__}")


_FIELDS = {
    "HELLO": {"protocol_version"},
    "MODEL_SPEC": {"encoder"},
    "STATS_REQUEST": {"subset_size", "epsilon", "delta", "clip_radius", "session_id", "mode"},
    "STATS_RESPONSE": {"mean", "covariance", "count", "session_id", "sigma_used",
                       "encoder_fingerprint"},
    "ERROR": {"code", "message", "session_id"},
}


def message_from_dict(obj) -> object:
    if not isinstance(obj, dict):
        raise FrameError("BAD_PAYLOAD", "payload is not an object")
    tag = obj.get("type")
    if not isinstance(tag, str):
        raise FrameError("BAD_PAYLOAD", "payload lacks a type tag")
    if tag not in _FIELDS:
        raise FrameError("UNKNOWN_MESSAGE", f"unknown message tag {tag!r}")
    fields = set(obj) - {"type"}
    expected = _FIELDS[tag]
    if tag == "STATS_REQUEST" and obj.get("mode") == MODE_SEEDED:
        expected = expected | {"seed"}
    if fields != expected:
        raise FrameError(
            "BAD_PAYLOAD", f"{tag} fields must be exactly {sorted(expected)}, got {sorted(fields)}"
        )
    body = {key: obj[key] for key in fields}
    try:
        if tag == "HELLO":
            return Hello(**body)
        if tag == "MODEL_SPEC":
            return ModelSpec(EncoderSpec.from_dict(body["encoder"]))
        if tag == "STATS_REQUEST":
            return StatsRequest(**body)
        if tag == "STATS_RESPONSE":
            return StatsResponse(**body)
        return ErrorMessage(**body)
    except (ParameterError, TypeError) as exc:
        raise FrameError("BAD_PAYLOAD", f"{tag}: {exc}") from exc


def encode_frame(msg) -> bytes:
    payload = json.dumps(
        message_to_dict(msg), sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameError("FRAME_TOO_LARGE", f"payload of {len(payload)} bytes exceeds 64 MiB")
    return _HEADER.pack(len(payload)) + payload


def decode_frame(data) -> object:
    """Decode exactly one frame. Malformed input raises FrameError, never
    anything else."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise FrameError("BAD_PAYLOAD", "frame must be bytes")
    data = bytes(data)
    if len(data) < 4:
        raise FrameError("FRAME_TRUNCATED", f"got {len(data)} bytes, need a 4-byte header")
    (length,) = _HEADER.unpack_from(data)
    if length > MAX_FRAME_BYTES:
        raise FrameError("FRAME_TOO_LARGE", f"declared payload of {length} bytes exceeds 64 MiB")
    body = len(data) - 4
    if body < length:
        raise FrameError("FRAME_TRUNCATED", f"header declares {length} bytes, got {body}")
    if body > length:
        raise FrameError("FRAME_TRAILING", f"{body - length} bytes past the declared payload")
    try:
        obj = json.loads(data[4:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError("BAD_PAYLOAD", f"payload is not canonical JSON: {exc}") from exc
    return message_from_dict(obj)


def pack_covariance(cov) -> tuple:
    """Upper triangle, row-major, d(d+1)/2 floats."""
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    return tuple(float(cov[i, j]) for i in range(d) for j in range(i, d))


def expand_covariance(values, dim: int) -> np.ndarray:
    """Inverse of pack_covariance; both mirror entries get the same float."""
    values = tuple(float(v) for v in values)
    if len(values) != dim * (dim + 1) // 2:
        raise ShapeError(
            f"{len(values)} triangular entries do not fill a {dim}x{dim} matrix"
        )
    out = np.empty((dim, dim))
    pos = 0
    for i in range(dim):
        for j in range(i, dim):
            out[i, j] = values[pos]
            out[j, i] = values[pos]
            pos += 1
    return out


def _subset_indices(count: int, m_tilde: int, seed: int) -> np.ndarray:
    if not isinstance(m_tilde, int) or isinstance(m_tilde, bool) or m_tilde < 1:
        raise ParameterError(f"subset size must be a positive integer, got {m_tilde}")
    if m_tilde > count:
        raise InsufficientSamplesError(
            f"subset of {m_tilde} requested from {count} available rows"
        )
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return rng.choice(count, size=m_tilde, replace=False)


def sample_subset(data: RawDataset, m_tilde: int, seed: int) -> RawDataset:
    """Uniform sample of m_tilde rows without replacement, labels carried."""
    idx = _subset_indices(data.count, m_tilde, seed)
    return RawDataset(data.points[idx], data.labels[idx], data.class_probs)


@dataclass
class SellerNode:
    """One seller: a raw dataset (encoded on request) or pre-encoded
    embeddings. Serves any number of sessions; each samples independently."""

    node_id: str
    raw: RawDataset = None
    embeddings: EmbeddingSet = None
    pinned_fingerprint: str = None
    state: str = "idle"

    def __post_init__(self):
        if not isinstance(self.node_id, str) or not self.node_id:
            raise ParameterError("node_id must be a nonempty string")
        if (self.raw is None) == (self.embeddings is None):
            raise ParameterError("node needs exactly one of raw data or embeddings")

    @property
    def count(self) -> int:
        return self.raw.count if self.raw is not None else self.embeddings.count


def node_seeds(request_seed: int, node_id: str) -> tuple:
    """Per-node (subset_seed, noise_seed) for a seeded request: every seller
    mixes its own id into the buyer's seed, so streams never collide."""
    return (
        derive_seed(request_seed, node_id, "subset"),
        derive_seed(request_seed, node_id, "noise"),
    )


def seller_pipeline(data, spec: EncoderSpec, budget: PrivacyBudget,
                    subset_seed: int, noise_seed: int):
    """sample -> encode -> clip -> calibrate -> noise -> summarize.

    Returns (GaussianSummary, NoiseCalibration). The single code path behind
    both the protocol handler and the robustness harness.
    """
    if isinstance(data, RawDataset):
        subset = sample_subset(data, budget.subset_size, subset_seed)
        vectors = encode(spec, subset)
    else:
        idx = _subset_indices(data.count, budget.subset_size, subset_seed)
        vectors = data.vectors[idx]
    clipped = clip_to_ball(vectors, budget.clip_radius)
    calibration = calibrate_sigma(budget)
    noisy = apply_gaussian_mechanism(clipped, calibration.sigma, noise_seed)
    return summarize(noisy), calibration


def buyer_summary(data, spec: EncoderSpec, clip_radius: float,
                  noise_sigma: float = 0.0, noise_seed: int = None) -> GaussianSummary:
    """The buyer's own summary over its full dataset: noiseless by default,
    with optional symmetric noising for ablation."""
    if isinstance(data, RawDataset):
        vectors = encode(spec, data)
    else:
        vectors = data.vectors
    prepared = clip_to_ball(vectors, clip_radius)
    if noise_sigma > 0.0:
        seed = noise_seed if noise_seed is not None else secure_seed()
        prepared = apply_gaussian_mechanism(prepared, noise_sigma, seed)
    return summarize(prepared)


def _spec_problem(node: SellerNode, spec: EncoderSpec):
    if node.pinned_fingerprint is not None and spec.fingerprint() != node.pinned_fingerprint:
        return "encoder spec does not match the spec this node was started with"
    if node.raw is not None:
        if spec.kind != "toy_projection":
            return f"raw-data node cannot serve encoder kind {spec.kind!r}"
        if spec.input_dim != node.raw.dim:
            return (
                f"spec expects {spec.input_dim}-dimensional input, "
                f"node data has {node.raw.dim}"
            )
    else:
        if spec.kind != "external":
            return "pre-encoded node serves only external encoder specs"
        if spec.latent_dim != node.embeddings.dim:
            return (
                f"spec declares latent_dim {spec.latent_dim}, "
                f"node embeddings have {node.embeddings.dim}"
            )
    return None


class SellerSession:
    """Per-connection message handler. HELLO must come first and MODEL_SPEC
    before STATS_REQUEST; each incoming message gets exactly one reply."""

    def __init__(self, node: SellerNode):
        self.node = node
        self.ready = False
        self.spec = None
        self.last_session_id = ""

    def handle_bytes(self, frame: bytes) -> bytes:
        try:
            msg = decode_frame(frame)
        except FrameError as exc:
            return encode_frame(ErrorMessage(exc.code, exc.args[0], self.last_session_id))
        return encode_frame(self.handle_request(msg))

    def handle_request(self, msg) -> object:
        try:
            return self._dispatch(msg)
        except Exception as exc:  # a node must answer, never crash
            log.exception("node %s: unhandled failure", self.node.node_id)
            return ErrorMessage(
                "INTERNAL", f"{type(exc).__name__}: {exc}", self.last_session_id
            )

    def _dispatch(self, msg) -> object:
        if isinstance(msg, Hello):
            if msg.protocol_version != PROTOCOL_VERSION:
                return ErrorMessage(
                    "VERSION_MISMATCH",
                    f"node speaks version {PROTOCOL_VERSION}, peer sent {msg.protocol_version}",
                    "",
                )
            self.ready = True
            return Hello(PROTOCOL_VERSION)
        if not self.ready:
            return ErrorMessage("PROTOCOL_ORDER", "HELLO must precede any other message", "")
        if isinstance(msg, ModelSpec):
            problem = _spec_problem(self.node, msg.encoder)
            if problem is not None:
                return ErrorMessage("SPEC_MISMATCH", problem, "")
            self.spec = msg.encoder
            return Hello(PROTOCOL_VERSION)
        if isinstance(msg, StatsRequest):
            return self._stats(msg)
        return ErrorMessage(
            "PROTOCOL_ORDER",
            f"{type(msg).__name__} is not a valid buyer-to-seller message",
            self.last_session_id,
        )

    def _stats(self, msg: StatsRequest) -> object:
        self.last_session_id = msg.session_id
        if self.spec is None:
            return ErrorMessage(
                "PROTOCOL_ORDER", "MODEL_SPEC must precede STATS_REQUEST", msg.session_id
            )
        try:
            budget = PrivacyBudget(msg.epsilon, msg.delta, msg.clip_radius, msg.subset_size)
        except ParameterError as exc:
            return ErrorMessage("INVALID_PARAMETER", str(exc), msg.session_id)
        if msg.subset_size > self.node.count:
            return ErrorMessage(
                "INSUFFICIENT_DATA",
                f"subset of {msg.subset_size} requested, node holds {self.node.count} rows",
                msg.session_id,
            )
        if msg.mode == MODE_SEEDED:
            subset_seed, noise_seed = node_seeds(msg.seed, self.node.node_id)
        else:
            subset_seed, noise_seed = secure_seed(), secure_seed()
        data = self.node.raw if self.node.raw is not None else self.node.embeddings
        try:
            summary, calibration = seller_pipeline(data, self.spec, budget,
                                                   subset_seed, noise_seed)
        except (ShapeError, NumericInputError, ParameterError) as exc:
            return ErrorMessage("SPEC_MISMATCH", str(exc), msg.session_id)
        self.node.state = "served"
        log.info("node %s served session %s", self.node.node_id, msg.session_id)
        return StatsResponse(
            mean=tuple(float(v) for v in summary.mean),
            covariance=pack_covariance(summary.covariance),
            count=summary.count,
            session_id=msg.session_id,
            sigma_used=calibration.sigma,
            encoder_fingerprint=self.spec.fingerprint(),
        )


class InProcessChannel:
    """Loopback transport: passes real frames through a local session, so
    byte counts and transcripts match the socket transport exactly."""

    def __init__(self, node: SellerNode):
        self.session = SellerSession(node)
        self.bytes_sent = 0
        self.bytes_received = 0
        self.transcript = []

    def request(self, msg) -> object:
        frame = encode_frame(msg)
        self.bytes_sent += len(frame)
        self.transcript.append(("send", frame))
        reply = self.session.handle_bytes(frame)
        self.bytes_received += len(reply)
        self.transcript.append(("recv", reply))
        return decode_frame(reply)

    def close(self):
        pass


class SocketChannel:
    """TCP transport speaking the same frames."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.bytes_sent = 0
        self.bytes_received = 0
        self.transcript = []

    def request(self, msg) -> object:
        frame = encode_frame(msg)
        self.sock.sendall(frame)
        self.bytes_sent += len(frame)
        self.transcript.append(("send", frame))
        header = self._read_exact(4)
        (length,) = _HEADER.unpack(header)
        if length > MAX_FRAME_BYTES:
            raise FrameError("FRAME_TOO_LARGE", f"peer declared {length}-byte payload")
        reply = header + self._read_exact(length)
        self.bytes_received += len(reply)
        self.transcript.append(("recv", reply))
        return decode_frame(reply)

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ProtocolFailure("CONNECTION_CLOSED", "peer closed mid-frame")
            buf.extend(chunk)
        return bytes(buf)

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


def _recv_exact(sock, n: int):
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


class _SellerHandler(socketserver.BaseRequestHandler):
    def handle(self):
        session = SellerSession(self.server.node)
        while True:
            header = _recv_exact(self.request, 4)
            if header is None:
                return
            (length,) = _HEADER.unpack(header)
            if length > MAX_FRAME_BYTES:
                # The stream cannot be resynchronized past an oversized frame.
                reply = ErrorMessage(
                    "FRAME_TOO_LARGE", f"declared payload of {length} bytes exceeds 64 MiB", ""
                )
                self.request.sendall(encode_frame(reply))
                return
            payload = _recv_exact(self.request, length)
            if payload is None:
                return
            try:
                self.request.sendall(session.handle_bytes(header + payload))
            except OSError:
                return


class SellerServer(socketserver.ThreadingTCPServer):
    """Long-running seller endpoint; one session per connection, sessions
    isolated, process stays up across malformed frames."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, node: SellerNode):
        self.node = node
        super().__init__(address, _SellerHandler)

    def handle_error(self, request, client_address):
        log.exception("node %s: connection %s failed", self.node.node_id, client_address)


@dataclass
class SellerOutcome:
    """Per-seller result of one valuation round."""

    node_id: str
    summary: GaussianSummary = None
    sigma_used: float = None
    failure: str = None
    bytes_sent: int = 0
    bytes_received: int = 0

    @property
    def failed(self) -> bool:
        return self.summary is None


def in_process_endpoints(nodes) -> list:
    return [(node.node_id, (lambda n=node: InProcessChannel(n))) for node in nodes]


def socket_endpoints(addresses) -> list:
    """addresses: iterable of (node_id, host, port)."""
    return [
        (node_id, (lambda h=host, p=port: SocketChannel(h, p)))
        for node_id, host, port in addresses
    ]


def _query_seller(node_id: str, connect, spec: EncoderSpec, request: StatsRequest) -> SellerOutcome:
    outcome = SellerOutcome(node_id=node_id)
    channel = None
    try:
        channel = connect()
        reply = channel.request(Hello(PROTOCOL_VERSION))
        if not isinstance(reply, Hello):
            outcome.failure = _reply_problem(reply, "HELLO")
            return outcome
        reply = channel.request(ModelSpec(spec))
        if not isinstance(reply, Hello):
            outcome.failure = _reply_problem(reply, "MODEL_SPEC ack")
            return outcome
        reply = channel.request(request)
        if not isinstance(reply, StatsResponse):
            outcome.failure = _reply_problem(reply, "STATS_RESPONSE")
            return outcome
        if reply.session_id != request.session_id:
            outcome.failure = f"session id mismatch: {reply.session_id!r}"
            return outcome
        if reply.count != request.subset_size:
            outcome.failure = (
                f"count contract violated: response count {reply.count}, "
                f"requested {request.subset_size}"
            )
            return outcome
        if reply.encoder_fingerprint != spec.fingerprint():
            outcome.failure = "encoder fingerprint mismatch"
            return outcome
        outcome.summary = GaussianSummary(
            np.array(reply.mean),
            expand_covariance(reply.covariance, len(reply.mean)),
            reply.count,
        )
        outcome.sigma_used = reply.sigma_used
    except (OSError, FrameError, ProtocolFailure, NotPSDError, ShapeError,
            NumericInputError, ParameterError) as exc:
        outcome.failure = f"{type(exc).__name__}: {exc}"
    finally:
        if channel is not None:
            channel.close()
            outcome.bytes_sent = channel.bytes_sent
            outcome.bytes_received = channel.bytes_received
    return outcome


def _reply_problem(reply, expected: str) -> str:
    if isinstance(reply, ErrorMessage):
        return f"{reply.code}: {reply.message}"
    return f"expected {expected}, got {type(reply).__name__}"


def orchestrate_valuation(buyer_data, sellers, spec: EncoderSpec, budget: PrivacyBudget,
                          master_seed: int = None, noisy_buyer: bool = False,
                          concurrent: bool = False):
    """Query every seller endpoint and compute the buyer's own summary.

    sellers: list of (node_id, connect) with connect() -> channel. Returns
    (buyer GaussianSummary, [SellerOutcome] sorted by node_id); a seller
    failure is recorded, not raised, as long as the others can still answer.
    """
    if not sellers:
        raise ParameterError("at least one seller endpoint is required")
    if master_seed is not None:
        request_seed = derive_seed(master_seed, "buyer", "stats-request")
        session_id = f"sess-{derive_seed(master_seed, 'buyer', 'session'):016x}"
        mode, seed = MODE_SEEDED, request_seed
    else:
        session_id = f"sess-{secrets.token_hex(8)}"
        mode, seed = MODE_SECURE, None
    request = StatsRequest(
        subset_size=budget.subset_size,
        epsilon=budget.epsilon,
        delta=budget.delta,
        clip_radius=budget.clip_radius,
        session_id=session_id,
        mode=mode,
        seed=seed,
    )
    if concurrent:
        with ThreadPoolExecutor(max_workers=len(sellers)) as pool:
            futures = [
                pool.submit(_query_seller, node_id, connect, spec, request)
                for node_id, connect in sellers
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [
            _query_seller(node_id, connect, spec, request) for node_id, connect in sellers
        ]
    outcomes.sort(key=lambda o: o.node_id)

    noise_sigma = 0.0
    noise_seed = None
    if noisy_buyer:
        noise_sigma = calibrate_sigma(budget).sigma
        if master_seed is not None:
            noise_seed = derive_seed(request_seed, "buyer", "noise")
    buyer = buyer_summary(buyer_data, spec, budget.clip_radius, noise_sigma, noise_seed)
    return buyer, outcomes
