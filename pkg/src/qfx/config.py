"""Run configuration models.

One pydantic tree serves the config file, the service request bodies, and
the in-process pipeline. Defaults follow the published recipe: 0.8 split,
sequence length 4, 50 epochs at lr 5e-3 for the forecaster; 8 workers,
30-step rollouts, gamma 0.995, entropy beta 0.05, lr 1e-5 and reward clip
[-15, +30] for the agent.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class MarketConfig(BaseModel):
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    label_horizon: int = Field(default=5, ge=1)
    label_threshold: float = Field(default=0.012, gt=0.0)


class QlstmConfig(BaseModel):
    input_dim: int = Field(default=6, ge=1)
    hidden_dim: int = Field(default=2, ge=1)
    seq_len: int = Field(default=4, ge=1)
    n_qubits: int = Field(default=4, ge=1, le=12)
    vqc_layers: int = Field(default=2, ge=1)
    epochs: int = Field(default=50, ge=0)
    lr: float = Field(default=5e-3, ge=0.0)


class EnvConfig(BaseModel):
    initial_capital: float = Field(default=100_000.0, gt=0.0)
    unit_notional: float = Field(default=1_000.0, gt=0.0)
    clip_low: float = -15.0
    clip_high: float = 30.0
    time_cost: float = Field(default=0.02, ge=0.0)
    entry_bonus: float = Field(default=0.5, ge=0.0)
    entry_penalty: float = Field(default=2.0, ge=0.0)
    exit_profit_base: float = Field(default=10.0, ge=0.0)
    exit_profit_slope: float = Field(default=50.0, ge=0.0)
    exit_loss_base: float = Field(default=2.0, ge=0.0)
    exit_loss_slope: float = Field(default=10.0, ge=0.0)
    holding_coeff: float = Field(default=5.0, ge=0.0)
    invalid_penalty: float = Field(default=0.1, ge=0.0)

    @model_validator(mode="after")
    def _ordered_clip(self):
        if self.clip_low >= self.clip_high:
            raise ValueError(f"clip_low {self.clip_low} must be < clip_high {self.clip_high}")
        return self


class TrainConfig(BaseModel):
    workers: int = Field(default=8, ge=1)
    rollout_len: int = Field(default=30, ge=1)
    gamma: float = Field(default=0.995, gt=0.0, lt=1.0)
    entropy_beta: float = Field(default=0.05, ge=0.0)
    lr: float = Field(default=1e-5, ge=0.0)
    max_episodes: int = Field(default=2000, ge=1)
    use_vqc: bool = True  # False swaps each circuit for a dense block (classical baseline)
    baseline_hidden: int = Field(default=8, ge=1)
    latent_dim: int = Field(default=8, ge=1, le=12)
    vqc_layers: int = Field(default=2, ge=1)


class SeedConfig(BaseModel):
    data_shuffle: int = 1
    init: int = 2
    sampling: int = 3

    @classmethod
    def from_master(cls, seed: int) -> "SeedConfig":
        return cls(data_shuffle=seed, init=seed, sampling=seed)


class RunConfig(BaseModel):
    data: str
    out: str
    market: MarketConfig = MarketConfig()
    qlstm: QlstmConfig = QlstmConfig()
    env: EnvConfig = EnvConfig()
    train: TrainConfig = TrainConfig()
    seeds: SeedConfig = SeedConfig()

    def resolved_json(self) -> str:
        return self.model_dump_json(indent=2)
