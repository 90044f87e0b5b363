"""Ideal ordered SIC receiver and Monte-Carlo estimation of decode counts.

The receiver sorts simultaneous transmissions by received power, decodes
the strongest first, removes it perfectly, and proceeds until the first
failure.  ``m_h``, the mean number of packets decoded out of ``h``
simultaneous transmissions, has no convenient closed form for h >= 2 and
is estimated by simulation and cached in :class:`MhTable`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .model import outage_coefficient, target_snr

DEFAULT_SAMPLES = 100_000

#: significant digits used to quantize gamma/epsilon cache keys.
_KEY_DIGITS = 6


class MhLookupError(LookupError):
    """A requested (h, gamma, epsilon) entry is not in the table."""


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one SIC pass over a slot.

    ``decoded_flags`` is aligned to the caller's original transmitter
    order; in descending received-power order the successes always form a
    prefix (decoding stops at the first failure).
    """

    num_decoded: int
    decoded_flags: tuple[bool, ...]


def _prefix_decode_count(powers_desc: np.ndarray, gamma: float) -> int:
    """Number of packets decoded from powers sorted in descending order.

    Packet l succeeds iff packets 1..l-1 succeeded and its power beats
    ``gamma`` times (noise + residual interference from weaker packets).
    """
    residual = np.cumsum(powers_desc[::-1])[::-1] - powers_desc
    ok = powers_desc >= gamma * (1.0 + residual)
    if ok.all():
        return len(powers_desc)
    return int(np.argmin(ok))


def decode_slot(
    gains: Iterable[float],
    gamma: float,
    epsilon: float,
    rng: np.random.Generator | None = None,
) -> DecodeOutcome:
    """Run the ideal SIC receiver over one slot.

    ``gains`` are unit-mean exponential fading gains, one per transmitter;
    received powers are ``gain * target_snr(gamma, epsilon)``.  Ties in
    received power are broken by a uniformly random permutation before
    sorting.  An empty slot decodes zero packets.
    """
    g = np.asarray(list(gains), dtype=float)
    if g.size == 0:
        return DecodeOutcome(0, ())
    if np.any(g <= 0.0):
        raise ValueError("fading gains must be positive")
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    powers = g * target_snr(gamma, epsilon)
    if rng is None:
        rng = np.random.default_rng()
    perm = rng.permutation(g.size)
    # stable sort after a random permutation = random tie-breaking
    order = perm[np.argsort(-powers[perm], kind="stable")]
    n_decoded = _prefix_decode_count(powers[order], gamma)
    flags = np.zeros(g.size, dtype=bool)
    flags[order[:n_decoded]] = True
    return DecodeOutcome(n_decoded, tuple(bool(x) for x in flags))


def _decode_counts(gains: np.ndarray, gamma: float, epsilon: float) -> np.ndarray:
    """Decoded count for each row of a (samples, h) gain matrix."""
    s0 = target_snr(gamma, epsilon)
    powers = np.sort(gains, axis=1)[:, ::-1] * s0
    residual = np.cumsum(powers[:, ::-1], axis=1)[:, ::-1] - powers
    ok = powers >= gamma * (1.0 + residual)
    counts = np.where(ok.all(axis=1), gains.shape[1], np.argmin(ok, axis=1))
    return counts.astype(np.int64)


def estimate_mh(
    h: int,
    gamma: float,
    epsilon: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo estimate of m_h(gamma) and its standard error.

    Draws ``samples`` i.i.d. slots of ``h`` unit-mean exponential gains and
    decodes each.  ``m_0 = 0`` by convention.  Deterministic given ``seed``.
    """
    if h < 0:
        raise ValueError(f"h must be >= 0, got {h}")
    if h == 0:
        return 0.0, 0.0
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    gains = rng.standard_exponential((samples, h))
    counts = _decode_counts(gains, gamma, epsilon)
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr


def quantize_key(x: float) -> float:
    """Round to the significant digits used in table keys."""
    return float(f"{x:.{_KEY_DIGITS}g}")


def entry_seed(seed_base: int, h: int, gamma: float, epsilon: float) -> int:
    """Stable per-entry RNG seed derived from the base seed and the key."""
    key = f"{seed_base}|{h}|{quantize_key(gamma)!r}|{quantize_key(epsilon)!r}"
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class MhEntry:
    h: int
    gamma: float
    epsilon: float
    samples: int
    seed: int
    estimate: float
    stderr: float


class MhTable:
    """Cache of Monte-Carlo m_h estimates keyed by (h, gamma, epsilon).

    gamma and epsilon are quantized to six significant digits so that the
    per-backlog thresholds of the adaptive policy map to a bounded key set.
    Completed tables are immutable in practice: entries are only added,
    never replaced, and lookups never trigger silent recomputation.
    """

    #: persisted column order; stable across versions.
    COLUMNS = ("h", "gamma", "epsilon", "samples", "seed", "estimate", "stderr")

    def __init__(self) -> None:
        self._entries: dict[tuple[int, float, float], MhEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: tuple[int, float, float]) -> bool:
        h, gamma, epsilon = key
        return (h, quantize_key(gamma), quantize_key(epsilon)) in self._entries

    def entries(self) -> list[MhEntry]:
        return sorted(self._entries.values(), key=lambda e: (e.gamma, e.epsilon, e.h))

    def entry(self, h: int, gamma: float, epsilon: float) -> MhEntry:
        key = (h, quantize_key(gamma), quantize_key(epsilon))
        try:
            return self._entries[key]
        except KeyError:
            raise MhLookupError(
                f"no m_h entry for h={h}, gamma={gamma}, epsilon={epsilon}"
            ) from None

    def get(self, h: int, gamma: float, epsilon: float) -> float:
        """m_h estimate, raising :class:`MhLookupError` when absent."""
        if h == 0:
            return 0.0
        return self.entry(h, gamma, epsilon).estimate

    def add(self, entry: MhEntry) -> None:
        if not 0.0 <= entry.estimate <= entry.h:
            raise ValueError(f"estimate {entry.estimate} outside [0, {entry.h}]")
        key = (entry.h, quantize_key(entry.gamma), quantize_key(entry.epsilon))
        self._entries[key] = entry

    def ensure(
        self,
        h_max: int,
        gamma: float,
        epsilon: float,
        samples: int = DEFAULT_SAMPLES,
        seed_base: int = 0,
    ) -> int:
        """Populate any missing entries for h = 0..h_max at this gamma.

        Returns the number of entries actually computed; existing entries
        are never re-sampled, so a warm table costs nothing.
        """
        if h_max < 0:
            raise ValueError(f"h_max must be >= 0, got {h_max}")
        gq, eq = quantize_key(gamma), quantize_key(epsilon)
        computed = 0
        for h in range(h_max + 1):
            if (h, gq, eq) in self._entries:
                continue
            seed = entry_seed(seed_base, h, gamma, epsilon)
            est, err = estimate_mh(h, gamma, epsilon, samples=samples, seed=seed)
            self._entries[(h, gq, eq)] = MhEntry(h, gq, eq, samples, seed, est, err)
            computed += 1
        return computed

    def save(self, path: str | Path) -> None:
        """Write the table as a flat text file (one row per entry)."""
        lines = ["# sicra m_h table v1", "# columns: " + " ".join(self.COLUMNS)]
        for e in self.entries():
            lines.append(
                f"{e.h} {e.gamma!r} {e.epsilon!r} {e.samples} {e.seed} "
                f"{e.estimate!r} {e.stderr!r}"
            )
        tmp = Path(path).with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "MhTable":
        """Reload a persisted table; estimates round-trip bit-identically."""
        table = cls()
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != len(cls.COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(cls.COLUMNS)} columns")
            h, gamma, epsilon, samples, seed, est, err = parts
            table.add(
                MhEntry(
                    h=int(h),
                    gamma=float(gamma),
                    epsilon=float(epsilon),
                    samples=int(samples),
                    seed=int(seed),
                    estimate=float(est),
                    stderr=float(err),
                )
            )
        return table

    @classmethod
    def load_or_empty(cls, path: str | Path) -> "MhTable":
        p = Path(path)
        return cls.load(p) if p.exists() else cls()


def mh_table(
    h_max: int,
    gamma: float,
    epsilon: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    path: str | Path | None = None,
) -> MhTable:
    """Build (and optionally persist) a table covering h = 0..h_max.

    When ``path`` exists it is loaded first, so matching entries are reused
    and a reload yields bit-identical estimates.  I/O failures propagate;
    the table is never silently recomputed under a different seed.
    """
    if h_max < 1:
        raise ValueError(f"h_max must be >= 1, got {h_max}")
    table = MhTable.load_or_empty(path) if path is not None else MhTable()
    table.ensure(h_max, gamma, epsilon, samples=samples, seed_base=seed)
    if path is not None:
        table.save(path)
    return table
