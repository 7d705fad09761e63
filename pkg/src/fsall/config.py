"""Run configuration: flat ``key = value`` files, defaults, validation, hashing."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    """Invalid configuration file or option values."""


@dataclass
class LossWeights:
    """Weights of the two training objectives.

    ``psi`` scales the mask BCE term; ``lambda_*`` weight the encoder/generator
    reconstruction terms (rec, id, ldm, latent, lpips); ``gamma_*`` weight the
    swap-stage terms (rec, id, ldm, lpips).
    """

    psi: float = 1.0
    lambda_rec: float = 1.0
    lambda_id: float = 0.5
    lambda_ldm: float = 1.0
    lambda_latent: float = 0.5
    lambda_lpips: float = 0.8
    gamma_rec: float = 1.0
    gamma_id: float = 1.0
    gamma_ldm: float = 1.0
    gamma_lpips: float = 0.8

    def validate(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"loss weight {f.name} must be >= 0")


@dataclass
class BlendConfig:
    feather_radius: int = 3
    mask_threshold: float = 0.5
    cg_tolerance: float = 1e-5
    cg_max_iters: int = 2000

    def validate(self):
        if self.feather_radius < 0:
            raise ConfigError("feather_radius must be >= 0")
        if not 0.0 < self.mask_threshold < 1.0:
            raise ConfigError("mask_threshold must be in (0, 1)")
        if self.cg_tolerance <= 0:
            raise ConfigError("cg_tolerance must be > 0")
        if self.cg_max_iters < 1:
            raise ConfigError("cg_max_iters must be >= 1")


@dataclass
class RunConfig:
    resolution: int = 64
    latent_dim: int = 64
    heads: int = 4
    reduction_ratio: int = 4
    seed: int = 0
    batch_size: int = 16
    lr_mde: float = 1e-4
    lr_als: float = 5e-5
    epochs_mde: int = 10
    epochs_als: int = 4
    epochs_regressor: int = 8
    dataset_count: int = 2000
    eval_pairs: int = 100
    loss_weights: LossWeights = field(default_factory=LossWeights)
    blend: BlendConfig = field(default_factory=BlendConfig)

    def validate(self):
        r = self.resolution
        if r < 32 or (r & (r - 1)) != 0:
            raise ConfigError(f"resolution must be a power of two >= 32, got {r}")
        if self.latent_dim < 4:
            raise ConfigError("latent_dim must be >= 4")
        if self.heads < 1 or self.latent_dim % self.heads != 0:
            raise ConfigError(
                f"latent_dim ({self.latent_dim}) must be divisible by heads ({self.heads})"
            )
        if self.reduction_ratio < 1:
            raise ConfigError("reduction_ratio must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        for name in ("lr_mde", "lr_als"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("epochs_mde", "epochs_als", "epochs_regressor",
                     "dataset_count", "eval_pairs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        self.loss_weights.validate()
        self.blend.validate()


# config-file key -> (sub-object attribute or "", field name, type)
_INT = int
_FLOAT = float
_KEYS = {
    "resolution": ("", "resolution", _INT),
    "latent_dim": ("", "latent_dim", _INT),
    "heads": ("", "heads", _INT),
    "reduction_ratio": ("", "reduction_ratio", _INT),
    "seed": ("", "seed", _INT),
    "batch_size": ("", "batch_size", _INT),
    "lr_mde": ("", "lr_mde", _FLOAT),
    "lr_als": ("", "lr_als", _FLOAT),
    "epochs_mde": ("", "epochs_mde", _INT),
    "epochs_als": ("", "epochs_als", _INT),
    "epochs_regressor": ("", "epochs_regressor", _INT),
    "dataset_count": ("", "dataset_count", _INT),
    "eval_pairs": ("", "eval_pairs", _INT),
    "psi": ("loss_weights", "psi", _FLOAT),
    "lambda_1": ("loss_weights", "lambda_rec", _FLOAT),
    "lambda_2": ("loss_weights", "lambda_id", _FLOAT),
    "lambda_3": ("loss_weights", "lambda_ldm", _FLOAT),
    "lambda_4": ("loss_weights", "lambda_latent", _FLOAT),
    "lambda_5": ("loss_weights", "lambda_lpips", _FLOAT),
    "gamma_1": ("loss_weights", "gamma_rec", _FLOAT),
    "gamma_2": ("loss_weights", "gamma_id", _FLOAT),
    "gamma_3": ("loss_weights", "gamma_ldm", _FLOAT),
    "gamma_4": ("loss_weights", "gamma_lpips", _FLOAT),
    "feather_radius": ("blend", "feather_radius", _INT),
    "mask_threshold": ("blend", "mask_threshold", _FLOAT),
    "cg_tolerance": ("blend", "cg_tolerance", _FLOAT),
    "cg_max_iters": ("blend", "cg_max_iters", _INT),
}


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    cfg = RunConfig()
    unknown = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            unknown.append(f"{key} (line {lineno})")
            continue
        sub, attr, typ = _KEYS[key]
        try:
            parsed = typ(value)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: cannot parse {value!r} as {typ.__name__} for key {key!r}"
            ) from None
        target = getattr(cfg, sub) if sub else cfg
        setattr(target, attr, parsed)
    if unknown:
        raise ConfigError(f"{source}: unknown config keys: " + ", ".join(unknown))
    cfg.validate()
    return cfg


def parse_config(path) -> RunConfig:
    """Parse a flat key = value config file, applying defaults for missing keys."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, source=str(path))


def dump_config(cfg: RunConfig) -> str:
    """Render the fully resolved config as canonical key = value text."""
    lines = []
    for key, (sub, attr, typ) in _KEYS.items():
        target = getattr(cfg, sub) if sub else cfg
        value = getattr(target, attr)
        if typ is _FLOAT:
            lines.append(f"{key} = {value:.10g}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 digest of the resolved config text, used for stage-reuse safety."""
    return hashlib.sha256(dump_config(cfg).encode("utf-8")).hexdigest()
