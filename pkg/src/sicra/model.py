"""System configuration and the two physical-layer primitives.

Everything downstream works in SI units: seconds, Hz, bits, and linear
(non-dB) SNR values.  The only dB quantity is the background noise power
``P_N``, which is carried for documentation purposes only: all powers in
the model are normalized to the noise floor, so it cancels everywhere.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

BITS_PER_BYTE = 8

#: config keys accepted in a configuration file, in canonical order.
CONFIG_KEYS = (
    "n",
    "L",
    "W",
    "epsilon",
    "gamma_max",
    "lambda",
    "k_c",
    "a_gamma",
    "b_gamma",
    "T_0",
    "P_N",
)

_REQUIRED_KEYS = ("n", "L", "W", "epsilon", "gamma_max", "lambda")


class ConfigError(ValueError):
    """Raised for malformed or out-of-domain configuration input."""


def outage_coefficient(epsilon: float) -> float:
    """Return ``c = -ln(1 - epsilon)`` for an outage tolerance in (0, 1)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return -math.log1p(-epsilon)


def slot_time(gamma: float, L: float, W: float) -> float:
    """Time in seconds to send an ``L``-bit packet at SNIR threshold ``gamma``.

    The modulation/coding scheme matched to threshold ``gamma`` carries
    ``log2(1 + gamma)`` bit/s/Hz, so the packet occupies
    ``L / (W * log2(1 + gamma))`` seconds of a ``W``-Hz channel.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if L < 1:
        raise ValueError(f"packet length must be >= 1 bit, got {L}")
    if W <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {W}")
    return L / (W * math.log2(1.0 + gamma))


def target_snr(gamma: float, epsilon: float) -> float:
    """Mean received SNR (linear) that keeps single-transmitter outage at ``epsilon``.

    With unit-mean exponential fading gain G, setting the mean received SNR
    to ``gamma / c`` (``c = -ln(1-epsilon)``) gives
    ``P(G * S0 >= gamma) = 1 - epsilon`` exactly.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return gamma / outage_coefficient(epsilon)


def _parse_packet_length(value: Any) -> int:
    """Parse a packet length into bits.

    Bare integers are bits.  Strings may carry an explicit unit suffix:
    ``b``/``bit``/``bits`` for bits, ``B``/``byte``/``bytes`` for bytes.
    """
    if isinstance(value, bool):
        raise ConfigError(f"invalid packet length {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError(f"packet length must be a whole number of bits, got {value}")
        return int(value)
    if isinstance(value, str):
        m = re.fullmatch(r"\s*(\d+)\s*(b|bit|bits|B|byte|bytes)?\s*", value)
        if not m:
            raise ConfigError(f"cannot parse packet length {value!r}")
        amount = int(m.group(1))
        unit = m.group(2)
        if unit in ("B", "byte", "bytes"):
            return amount * BITS_PER_BYTE
        return amount
    raise ConfigError(f"invalid packet length {value!r}")


@dataclass(frozen=True)
class SystemConfig:
    """All physical and protocol constants shared across the package.

    Immutable after construction; safe to share across threads and jobs.

    Attributes:
        n: number of nodes.
        L: packet length in bits.
        W: channel bandwidth in Hz.
        epsilon: single-transmitter outage tolerance, in (0, 1).
        gamma_max: largest feasible SNIR threshold (linear).
        lam: per-node message generation rate in 1/s (config key ``lambda``).
        k_c: backlog level at which the adaptive scheme switches regimes.
        a_gamma, b_gamma: coefficients of the threshold law 1/(a*k + b).
        T_0: slot duration when no node is backlogged, seconds.  Defaults
            to ``slot_time(gamma_max, L, W)``, the shortest feasible slot.
        P_N: background noise power in dBm.  Informational only.
        c: derived outage coefficient ``-ln(1 - epsilon)``.
    """

    n: int
    L: int
    W: float
    epsilon: float
    gamma_max: float
    lam: float
    k_c: int = 6
    a_gamma: float = 0.39
    b_gamma: float = 0.78
    T_0: float | None = None
    P_N: float = -107.0
    c: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.L < 1:
            raise ConfigError(f"L must be >= 1 bit, got {self.L}")
        if self.W <= 0.0:
            raise ConfigError(f"W must be positive, got {self.W}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.gamma_max <= 0.0:
            raise ConfigError(f"gamma_max must be positive, got {self.gamma_max}")
        if self.lam <= 0.0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.k_c < 1:
            raise ConfigError(f"k_c must be >= 1, got {self.k_c}")
        if self.a_gamma <= 0.0 or self.b_gamma <= 0.0:
            raise ConfigError("a_gamma and b_gamma must be positive")
        object.__setattr__(self, "c", outage_coefficient(self.epsilon))
        if self.T_0 is None:
            object.__setattr__(self, "T_0", slot_time(self.gamma_max, self.L, self.W))
        elif self.T_0 <= 0.0:
            raise ConfigError(f"T_0 must be positive, got {self.T_0}")

    @property
    def S(self) -> float:
        """Mean message generation time 1/lambda in seconds."""
        return 1.0 / self.lam

    def with_lambda(self, lam: float) -> "SystemConfig":
        """Copy of this config with a different generation rate."""
        return replace(self, lam=lam)

    def with_mean_generation_time(self, s_seconds: float) -> "SystemConfig":
        """Copy of this config with generation rate 1/``s_seconds``."""
        if s_seconds <= 0.0:
            raise ConfigError(f"mean generation time must be positive, got {s_seconds}")
        return replace(self, lam=1.0 / s_seconds)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SystemConfig":
        """Build a config from a parsed configuration mapping.

        Exactly the documented keys are accepted; ``lambda`` maps to the
        ``lam`` attribute and ``L`` may carry a byte/bit unit suffix.
        """
        unknown = set(data) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = [k for k in _REQUIRED_KEYS if k not in data]
        if missing:
            raise ConfigError(f"missing config keys: {missing}")
        kwargs: dict[str, Any] = {
            "n": int(data["n"]),
            "L": _parse_packet_length(data["L"]),
            "W": float(data["W"]),
            "epsilon": float(data["epsilon"]),
            "gamma_max": float(data["gamma_max"]),
            "lam": float(data["lambda"]),
        }
        for key in ("k_c", "a_gamma", "b_gamma", "T_0", "P_N"):
            if key in data and data[key] is not None:
                kwargs[key] = (int if key == "k_c" else float)(data[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "SystemConfig":
        """Load a YAML (or JSON) configuration file."""
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if not isinstance(data, Mapping):
            raise ConfigError(f"config file {path} must contain a mapping")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict[str, Any]:
        """Serializable mapping using the canonical config keys."""
        out: dict[str, Any] = {}
        for f in fields(self):
            if f.name == "c":
                continue
            key = "lambda" if f.name == "lam" else f.name
            out[key] = getattr(self, f.name)
        return out


def config_hash(config: SystemConfig) -> str:
    """Short stable hash of a configuration, for output provenance lines."""
    blob = json.dumps(config.to_mapping(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
