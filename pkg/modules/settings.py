"""
Settings Module
Typed configuration objects, the manifest reader, and the
defaults < config file < command-line flags merge
"""

import json
import logging
import math
import shlex
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

from config import (
    DEFAULT_BACKOFF, DEFAULT_BATCH_SIZE, DEFAULT_BETA, DEFAULT_BUCKET_WIDTH,
    DEFAULT_GAMMA, DEFAULT_MAX_LENGTH_RATIO, DEFAULT_MAX_OPS,
    DEFAULT_MAX_PAIRS_PER_EXAMPLE, DEFAULT_MAX_RETRIES, DEFAULT_MAX_TOKENS,
    DEFAULT_MIN_LENGTH_RATIO, DEFAULT_MIN_TOKENS, DEFAULT_OP_WEIGHTS,
    DEFAULT_QGRAM, DEFAULT_SEED, DEFAULT_TEMPERATURE, DEFAULT_TIMEOUT,
    DEFAULT_VOCAB_SAMPLING, DEFAULT_WINDOW, MIX_KEYS, OTHER_CASE_FOLD,
    PIVOT_CASE_FOLD, UNICODE_FORM,
)
from modules.errors import DataError, UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormConfig:
    """Normalization recipe; `case_fold` applies to the pivot side, `fold_other` to the other side"""

    form: str = UNICODE_FORM
    case_fold: bool = PIVOT_CASE_FOLD
    fold_other: bool = OTHER_CASE_FOLD

    def __post_init__(self):
        if self.form not in ("NFC", "NFKC"):
            raise UsageError(f"unsupported unicode form {self.form!r}")

    @property
    def norm_id(self):
        return f"{self.form.lower()}-ws" + ("-fold" if self.case_fold else "")

    def for_other(self):
        return replace(self, case_fold=self.fold_other)

    @classmethod
    def from_id(cls, norm_id):
        parts = norm_id.split("-")
        return cls(form=parts[0].upper(), case_fold="fold" in parts[1:])


@dataclass(frozen=True)
class JoinConfig:
    gamma: float = DEFAULT_GAMMA
    qgram: int = DEFAULT_QGRAM
    min_tokens: int = DEFAULT_MIN_TOKENS
    max_tokens: Optional[int] = DEFAULT_MAX_TOKENS
    max_pairs_per_example: int = DEFAULT_MAX_PAIRS_PER_EXAMPLE
    bucket_width: int = DEFAULT_BUCKET_WIDTH
    deduplicate: bool = True
    sorted_output: bool = False   # accepted for the CLI; output is (i, j) ordered either way
    jobs: int = 1

    def __post_init__(self):
        if not (0.0 <= self.gamma < 1.0):
            raise UsageError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.qgram < 1:
            raise UsageError(f"qgram must be >= 1, got {self.qgram}")
        if self.min_tokens < 0:
            raise UsageError("min_tokens must be >= 0")
        if self.max_tokens is not None and self.max_tokens < self.min_tokens:
            raise UsageError("max_tokens must be >= min_tokens")
        if self.max_pairs_per_example < 0:
            raise UsageError("max_pairs_per_example must be >= 0")
        if self.bucket_width < 1:
            raise UsageError("bucket_width must be >= 1")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")

    def admits(self, length):
        if length < self.min_tokens:
            return False
        return self.max_tokens is None or length <= self.max_tokens


@dataclass(frozen=True)
class NoiseConfig:
    beta: float = DEFAULT_BETA
    op_weights: Tuple[float, float, float] = DEFAULT_OP_WEIGHTS
    seed: int = DEFAULT_SEED
    sampling: str = DEFAULT_VOCAB_SAMPLING
    max_ops: int = DEFAULT_MAX_OPS
    jobs: int = 1

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise UsageError(f"beta must be in [0, 1], got {self.beta}")
        weights = tuple(float(w) for w in self.op_weights)
        if len(weights) != 3 or any(w < 0 for w in weights):
            raise UsageError("op_weights needs three non-negative weights (insert, remove, substitute)")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise UsageError(f"op_weights must sum to 1, got {math.fsum(weights)}")
        object.__setattr__(self, "op_weights", weights)
        if self.sampling not in ("frequency", "uniform"):
            raise UsageError(f"sampling must be 'frequency' or 'uniform', got {self.sampling!r}")
        if self.max_ops < 0:
            raise UsageError("max_ops must be >= 0")
        if not (0 <= self.seed < 2 ** 64):
            raise UsageError("seed must fit in 64 bits")

    @property
    def needs_vocabulary(self):
        return self.beta > 0 and (self.op_weights[0] > 0 or self.op_weights[2] > 0)


@dataclass(frozen=True)
class FilterConfig:
    min_ratio: float = DEFAULT_MIN_LENGTH_RATIO
    max_ratio: float = DEFAULT_MAX_LENGTH_RATIO

    def __post_init__(self):
        if not (0 <= self.min_ratio <= self.max_ratio):
            raise UsageError("length ratio bounds must satisfy 0 <= min_ratio <= max_ratio")


@dataclass(frozen=True)
class TransportConfig:
    kind: str = "stdio"
    command: Tuple[str, ...] = ()
    url: Optional[str] = None
    batch_size: int = DEFAULT_BATCH_SIZE
    window: int = DEFAULT_WINDOW
    max_retries: int = DEFAULT_MAX_RETRIES
    backoff: float = DEFAULT_BACKOFF
    timeout: float = DEFAULT_TIMEOUT
    generator_ids: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("stdio", "http"):
            raise UsageError(f"transport kind must be 'stdio' or 'http', got {self.kind!r}")
        command = shlex.split(self.command) if isinstance(self.command, str) else self.command
        object.__setattr__(self, "command", tuple(command))
        if self.batch_size < 1 or self.window < 1:
            raise UsageError("batch_size and window must be >= 1")
        if self.max_retries < 0 or self.backoff < 0 or self.timeout <= 0:
            raise UsageError("retry policy values must be non-negative and timeout positive")

    def generator_id(self, target_lang):
        return self.generator_ids.get(str(target_lang), f"remote:{target_lang}")


@dataclass(frozen=True)
class ManifestEntry:
    pivot_lang: str
    other_lang: str
    pivot_path: Optional[str] = None
    other_path: Optional[str] = None
    tsv_path: Optional[str] = None

    def __post_init__(self):
        if self.tsv_path is None and (self.pivot_path is None or self.other_path is None):
            raise UsageError(
                f"manifest entry {self.pivot_lang}-{self.other_lang} needs pivot_path and other_path, or tsv_path"
            )


@dataclass(frozen=True)
class PipelineConfig:
    gamma: float = DEFAULT_GAMMA
    beta: float = DEFAULT_BETA
    temperature: float = DEFAULT_TEMPERATURE
    seed: int = DEFAULT_SEED
    jobs: int = 1
    sorted_output: bool = False
    norm: NormConfig = field(default_factory=NormConfig)
    join: JoinConfig = field(default_factory=JoinConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)
    manifest: Tuple[ManifestEntry, ...] = ()
    output_dir: str = "eag_output"
    generator: str = "edit-replay"
    lexicons: Dict[str, str] = field(default_factory=dict)
    mix_total: Optional[int] = None
    mix_key: str = "pair"
    baseline: bool = True
    stats_only: bool = False

    def __post_init__(self):
        if self.temperature < 1:
            raise UsageError(f"temperature must be >= 1, got {self.temperature}")
        if self.generator not in ("edit-replay", "remote"):
            raise UsageError(f"generator must be 'edit-replay' or 'remote', got {self.generator!r}")
        if self.mix_key not in MIX_KEYS:
            raise UsageError(f"mix_key must be one of {MIX_KEYS}")
        if self.mix_total is not None and self.mix_total < 0:
            raise UsageError("mix_total must be >= 0")
        # top-level knobs win over the nested sections
        object.__setattr__(self, "join", replace(
            self.join, gamma=self.gamma, jobs=self.jobs, sorted_output=self.sorted_output))
        object.__setattr__(self, "noise", replace(
            self.noise, beta=self.beta, seed=self.seed, jobs=self.jobs))

    def to_dict(self):
        data = asdict(self)
        data["manifest"] = [asdict(entry) for entry in self.manifest]
        return data


def load_manifest(path):
    """
    Read a manifest file

    Args:
        path: JSON file holding a list of corpus entries (or {"corpora": [...]})

    Returns:
        tuple of ManifestEntry, relative paths resolved against the manifest's directory
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"manifest not found: {path}")
    except json.JSONDecodeError as e:
        raise DataError(f"manifest {path} is not valid JSON: {e}")

    if isinstance(raw, dict):
        raw = raw.get("corpora", [])
    if not isinstance(raw, list):
        raise DataError(f"manifest {path} must hold a list of corpora")

    base = path.parent
    entries = []
    for item in raw:
        resolved = dict(item)
        for key in ("pivot_path", "other_path", "tsv_path"):
            if resolved.get(key):
                resolved[key] = str((base / resolved[key]).resolve())
        try:
            entries.append(ManifestEntry(**resolved))
        except TypeError as e:
            raise DataError(f"bad manifest entry {item!r}: {e}")
    return tuple(entries)


_SECTIONS = {
    "norm": NormConfig,
    "join": JoinConfig,
    "noise": NoiseConfig,
    "filters": FilterConfig,
    "transport": TransportConfig,
}


def _merge(base, update):
    merged = dict(base)
    for key, value in update.items():
        if value is None:
            continue
        if isinstance(value, dict):
            nested = merged.get(key)
            merged[key] = _merge(nested if isinstance(nested, dict) else {}, value)
        else:
            merged[key] = value
    return merged


def _known(cls, values, section):
    names = {f.name for f in fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise UsageError(f"unknown {section} setting(s): {', '.join(sorted(unknown))}")
    return values


def build_pipeline_config(config_path=None, overrides=None):
    """
    Build the run configuration

    Precedence is defaults < config file < overrides; overrides that are None
    are treated as "not given".

    Args:
        config_path: optional JSON config file
        overrides: dict shaped like the config file (usually from CLI flags)

    Returns:
        PipelineConfig
    """
    values = {}
    if config_path:
        try:
            values = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {config_path}")
        except json.JSONDecodeError as e:
            raise UsageError(f"config file {config_path} is not valid JSON: {e}")
        if not isinstance(values, dict):
            raise UsageError(f"config file {config_path} must hold a JSON object")

    values = _merge(values, overrides or {})

    kwargs = {}
    for key, value in values.items():
        if key in _SECTIONS:
            kwargs[key] = _SECTIONS[key](**_known(_SECTIONS[key], value, key))
        elif key == "manifest":
            if isinstance(value, (str, Path)):
                kwargs[key] = load_manifest(value)
            else:
                kwargs[key] = tuple(ManifestEntry(**entry) for entry in value)
        else:
            kwargs[key] = value

    _known(PipelineConfig, kwargs, "pipeline")
    cfg = PipelineConfig(**kwargs)
    logger.debug("configuration: gamma=%s beta=%s T=%s seed=%s jobs=%s",
                 cfg.gamma, cfg.beta, cfg.temperature, cfg.seed, cfg.jobs)
    return cfg
