"""Versioned binary checkpoint format

Layout: b"FSC1" | uint32 LE header length | UTF-8 JSON header | raw little-endian
float64 parameter data in header order. The header records format version, model
version, latent_dim, input_size, seed, metadata and the name/shape of every tensor.
"""
import json
import logging
import struct
from pathlib import Path

import numpy as np

from config import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC, LOGGER_NAME
from errors import CheckpointCorruptError, CheckpointFormatError
from fibrosis.model.networks import GanModel, fingerprint, layer_shapes
from fibrosis.tensor_core import Tensor
from utils import file_access

logger = logging.getLogger(LOGGER_NAME)

_PREFIX = struct.Struct("<4sI")


def save_checkpoint(model, path):
    path = Path(path)
    named = model.named_parameters()
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_version": model.version,
        "latent_dim": model.latent_dim,
        "input_size": list(model.input_size),
        "seed": model.seed,
        "metadata": model.metadata,
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in named],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with file_access(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(_PREFIX.pack(CHECKPOINT_MAGIC, len(header_bytes)))
            f.write(header_bytes)
            for _, t in named:
                f.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    logger.info(f"Saved checkpoint {path} (model {fingerprint(model)})")
    return path


def _read_header(raw, path):
    if len(raw) < _PREFIX.size:
        raise CheckpointCorruptError(f"{path}: file too short ({len(raw)} bytes)")
    magic, header_len = _PREFIX.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    start = _PREFIX.size
    if start + header_len > len(raw):
        raise CheckpointCorruptError(f"{path}: header length {header_len} exceeds file size")
    try:
        header = json.loads(raw[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointCorruptError(f"{path}: unreadable header: {e}") from e
    if not isinstance(header, dict):
        raise CheckpointCorruptError(f"{path}: header is not a JSON object")
    if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported format version {header.get('format_version')!r}"
        )
    return header, start + header_len


def _check_layout(specs, latent_dim, input_size, path):
    """Tensor names and shapes must be exactly those of a built model"""
    if len(input_size) != 3 or input_size[0] != input_size[1]:
        raise CheckpointCorruptError(f"{path}: input_size {list(input_size)} is not a square patch")
    generator, discriminator = layer_shapes(latent_dim, input_size[0])
    expected = {f"generator.{k}": v for k, v in generator.items()}
    expected.update({f"discriminator.{k}": v for k, v in discriminator.items()})
    found = dict(specs)
    if len(found) != len(specs):
        raise CheckpointCorruptError(f"{path}: duplicate tensor names in header")

    missing = sorted(set(expected) - set(found))
    unexpected = sorted(set(found) - set(expected))
    wrong = sorted(n for n in set(expected) & set(found) if tuple(expected[n]) != found[n])
    if missing or unexpected or wrong:
        problems = []
        if missing:
            problems.append(f"missing {missing}")
        if unexpected:
            problems.append(f"unexpected {unexpected}")
        if wrong:
            problems.append("wrong shape " + ", ".join(f"{n} {list(found[n])} != {list(expected[n])}" for n in wrong))
        raise CheckpointCorruptError(f"{path}: tensor layout does not match the architecture: {'; '.join(problems)}")


def load_checkpoint(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"{path}: cannot read checkpoint: {e}") from e
    header, offset = _read_header(raw, path)
    try:
        specs = [(t["name"], tuple(int(d) for d in t["shape"])) for t in header["tensors"]]
        latent_dim = int(header["latent_dim"])
        input_size = tuple(int(d) for d in header["input_size"])
        seed = int(header["seed"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointCorruptError(f"{path}: incomplete header: {e}") from e
    _check_layout(specs, latent_dim, input_size, path)

    expected = sum(int(np.prod(shape)) for _, shape in specs) * 8
    payload = raw[offset:]
    if len(payload) != expected:
        raise CheckpointCorruptError(
            f"{path}: payload holds {len(payload)} bytes, header shapes need {expected}"
        )

    generator, discriminator = {}, {}
    cursor = 0
    for name, shape in specs:
        count = int(np.prod(shape))
        data = np.frombuffer(payload, dtype="<f8", count=count, offset=cursor).astype(np.float64)
        cursor += count * 8
        group, _, key = name.partition(".")
        target = generator if group == "generator" else discriminator
        target[key] = Tensor(data.reshape(shape), requires_grad=True)

    model = GanModel(
        generator=generator,
        discriminator=discriminator,
        latent_dim=latent_dim,
        input_size=input_size,
        seed=seed,
        version=header.get("model_version", ""),
        metadata=header.get("metadata", {}),
    )
    logger.info(f"Loaded checkpoint {path} (model {fingerprint(model)})")
    return model
