"""
Experiment configuration: YAML file -> validated pydantic models.

See ``experiment.config.yaml`` for the documented schema.
"""

import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from .data.partition import PartitionConfig
from .errors import ConfigError
from .federated.config import Algorithm, FederationConfig
from .nn.mlp import MlpArchitecture

DEFAULT_LR_GRID = [0.3, 0.1, 0.03, 0.01, 0.003, 0.001]

def lr_label(lr: float) -> str:
    """Learning rate as it appears in cell file names."""
    return f"{lr:g}"


# Fields that change how a run executes but never what it produces.
EXECUTION_ONLY_FIELDS = {"threads", "output_dir", "logging"}


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DatasetConfig(_Section):
    kind: Literal["mnist", "synthetic"] = "mnist"
    # mnist
    data_dir: str = "data/mnist"
    # synthetic
    num_classes: int = Field(10, ge=2)
    dim: int = Field(20, ge=1)
    per_class: int = Field(600, ge=1)
    test_per_class: int = Field(100, ge=1)
    class_separation: float = Field(3.0, ge=0)
    seed: int = 1234


class ModelConfig(_Section):
    hidden_dim: int = Field(128, ge=1)


class PartitionSettings(_Section):
    num_clients: int = Field(100, ge=1)
    alpha: PositiveFloat = 0.01
    # None: partition with the run seed
    seed: Optional[int] = None


class FederationSettings(_Section):
    clients_per_round: int = Field(10, ge=1)
    local_epochs: int = Field(2, ge=1)
    local_steps: Optional[int] = Field(None, ge=1)
    batch_size: int = Field(50, ge=1)
    rounds: int = Field(200, ge=1)


class DiagnosticsConfig(_Section):
    algorithm: Algorithm = Algorithm.MFL
    # None: first entry of lr_grid
    learning_rate: Optional[PositiveFloat] = None
    local_steps: int = Field(30, ge=1)
    from_round: int = Field(1, ge=1)
    pooling: Literal["by_round", "by_step"] = "by_round"


class LoggingConfig(_Section):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    file: str = ""
    console: bool = True


class ExperimentConfig(_Section):
    """Full declarative description of an experiment sweep."""

    name: str = "experiment"
    dataset: DatasetConfig = DatasetConfig()
    model: ModelConfig = ModelConfig()
    partition: PartitionSettings = PartitionSettings()
    federation: FederationSettings = FederationSettings()
    algorithms: List[Algorithm] = Field(default_factory=lambda: [Algorithm.MFL, Algorithm.RMFL], min_length=1)
    beta: float = Field(0.9, ge=0, lt=1)
    reversed_descent: bool = False
    lr_grid: List[PositiveFloat] = Field(default_factory=lambda: list(DEFAULT_LR_GRID), min_length=1)
    seeds: List[int] = Field(default_factory=lambda: list(range(10)), min_length=1)
    eval_every: int = Field(2, ge=1)
    final_window: int = Field(5, ge=1)
    threads: int = Field(1, ge=1)
    output_dir: str = "runs/experiment"
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()
    logging: LoggingConfig = LoggingConfig()

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if self.federation.clients_per_round > self.partition.num_clients:
            raise ValueError(
                f"clients_per_round ({self.federation.clients_per_round}) exceeds "
                f"num_clients ({self.partition.num_clients})"
            )
        for name in ("algorithms", "lr_grid", "seeds"):
            values = getattr(self, name)
            if len(set(values)) != len(values):
                raise ValueError(f"{name} contains duplicates: {values}")
        labels = [lr_label(lr) for lr in self.lr_grid]
        if len(set(labels)) != len(labels):
            raise ValueError(f"lr_grid values collide in cell file names: {self.lr_grid} -> {labels}")
        return self

    def architecture(self, in_dim: int, out_dim: int) -> MlpArchitecture:
        return MlpArchitecture(in_dim=in_dim, hidden_dim=self.model.hidden_dim, out_dim=out_dim)

    def partition_config(self, seed: int) -> PartitionConfig:
        return PartitionConfig(
            num_clients=self.partition.num_clients,
            alpha=self.partition.alpha,
            seed=seed if self.partition.seed is None else self.partition.seed,
        )

    def federation_config(
        self,
        algorithm: Union[Algorithm, str],
        learning_rate: float,
        seed: int,
        **overrides: object,
    ) -> FederationConfig:
        settings = self.federation.model_dump()
        settings.update(overrides)
        return FederationConfig.for_algorithm(
            Algorithm(algorithm),
            learning_rate,
            beta=self.beta,
            reversed_descent=self.reversed_descent,
            num_clients=self.partition.num_clients,
            seed=seed,
            **settings,
        )

    def config_hash(self) -> str:
        """sha256 over every result-affecting field."""
        payload = self.model_dump(mode="json", exclude=EXECUTION_ONLY_FIELDS)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def with_overrides(
        self,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        output: Optional[str] = None,
    ) -> "ExperimentConfig":
        """Apply the CLI's --seed / --threads / --output flags."""
        update = {}
        if seed is not None:
            update["seeds"] = [seed]
        if threads is not None:
            update["threads"] = threads
        if output is not None:
            update["output_dir"] = output
        return ExperimentConfig.model_validate({**self.model_dump(), **update})


def load_config(config_file: Union[str, Path] = "experiment.config.yaml") -> ExperimentConfig:
    """Load and validate an experiment configuration file."""
    path = Path(config_file)
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file '{path}' not found", {"path": str(path)}) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"configuration file '{path}' is not valid YAML: {exc}", {"path": str(path)}) from exc
    return parse_config(raw, source=str(path))


def parse_config(raw: object, source: str = "<dict>") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping", {"source": source})
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        problems = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        summary = "; ".join(f"{p['field']}: {p['message']}" for p in problems)
        raise ConfigError(f"{source}: invalid configuration ({summary})", {"source": source, "errors": problems}) from exc


def configure_logging(cfg: LoggingConfig) -> None:
    """Install root handlers according to the ``logging`` section."""
    handlers: List[logging.Handler] = []
    if cfg.console:
        handlers.append(logging.StreamHandler(sys.stderr))
    if cfg.file:
        Path(cfg.file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(cfg.file))
    if not handlers:
        handlers.append(logging.NullHandler())
    logging.basicConfig(
        level=getattr(logging, cfg.level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )
