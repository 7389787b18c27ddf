from __future__ import annotations

from dataclasses import asdict, dataclass

ACTIVATIONS = ("sine", "relu")
ENCODINGS = ("none", "positional", "gaussian")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and input encoding of a coordinate MLP.

    ``hidden_layers`` counts the M->M layers between the first (encoding->M)
    layer and the output layer, so a network has ``hidden_layers + 2`` linear
    layers in total.
    """

    in_dim: int = 2
    out_dim: int = 3
    hidden_layers: int = 3
    width: int = 32
    activation: str = "sine"
    omega: float = 30.0
    encoding: str = "positional"
    n_freqs: int = 16
    sigma: float = 1.4
    enc_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError("in_dim and out_dim must be positive")
        if self.hidden_layers < 1 or self.width < 1:
            raise ConfigError("hidden_layers and width must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.encoding not in ENCODINGS:
            raise ConfigError(f"unknown encoding {self.encoding!r}")
        if not self.omega > 0:
            raise ConfigError("omega must be > 0")
        if self.n_freqs < 0 or not self.sigma > 0:
            raise ConfigError("n_freqs must be >= 0 and sigma > 0")
        if self.encoding == "gaussian" and self.n_freqs < 1:
            raise ConfigError("gaussian encoding needs n_freqs >= 1")
        if not 0 <= self.enc_seed < 2**64:
            raise ConfigError("enc_seed must fit in 64 bits")

    @property
    def enc_dim(self) -> int:
        if self.encoding == "positional":
            return self.in_dim * (1 + 2 * self.n_freqs)
        if self.encoding == "gaussian":
            return 2 * self.n_freqs
        return self.in_dim

    @property
    def layer_sizes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) of every linear layer, input to output."""
        sizes = [(self.width, self.enc_dim)]
        sizes += [(self.width, self.width)] * self.hidden_layers
        sizes.append((self.out_dim, self.width))
        return sizes

    @property
    def n_params(self) -> int:
        return sum(o * i + o for o, i in self.layer_sizes)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ModelConfig":
        d = self.to_dict()
        d.update(changes)
        return ModelConfig(**d)
