"""Communication-volume and wall-time accounting for federated runs.

Costs are parameter payload bytes only (no headers or compression): each
federated round moves the flat float32 model down to every client and back
up. Optional embedding sharing before training adds a one-off preliminary
cost. MB means 2**20 bytes throughout. Wall times are recorded per phase
but never asserted on; they are hardware facts, not model facts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MB = float(1 << 20)


@dataclass(frozen=True)
class RoundEntry:
    round_index: int
    upload_bytes: int
    download_bytes: int


@dataclass
class CommLedger:
    entries: list[RoundEntry] = field(default_factory=list)
    preliminary_bytes: int = 0
    walltime: dict[str, float] = field(default_factory=dict)

    def record_round(self, round_index: int, upload_bytes: int, download_bytes: int) -> None:
        if upload_bytes < 0 or download_bytes < 0:
            raise ValueError("byte counts must be non-negative")
        self.entries.append(RoundEntry(round_index, upload_bytes, download_bytes))

    def add_walltime(self, phase: str, seconds: float) -> None:
        self.walltime[phase] = self.walltime.get(phase, 0.0) + seconds

    @property
    def round_count(self) -> int:
        return len(self.entries)

    @property
    def total_bytes(self) -> int:
        return self.preliminary_bytes + sum(
            e.upload_bytes + e.download_bytes for e in self.entries
        )

    @property
    def total_mb(self) -> float:
        return self.total_bytes / MB

    @property
    def walltime_s(self) -> float:
        return sum(self.walltime.values())

    def cumulative_mb(self) -> list[float]:
        """Running MB totals after each recorded round (preliminary included)."""
        out = []
        acc = self.preliminary_bytes
        for e in self.entries:
            acc += e.upload_bytes + e.download_bytes
            out.append(acc / MB)
        return out


def round_payload_bytes(theta_size: int, clients: int) -> int:
    """Bytes moved in one federated round: model down plus model up, per client."""
    return 2 * theta_size * 4 * clients


def embedding_share_bytes(labeled_counts: list[int], dim: int) -> int:
    """Bytes for uploading initial labeled embeddings and redistributing them."""
    return 2 * sum(labeled_counts) * dim * 4


@dataclass(frozen=True)
class RoundRow:
    round_index: int
    test_acc: float
    cum_mb: float
    phase: str


@dataclass
class MetricsTrace:
    rows: list[RoundRow] = field(default_factory=list)
    final_acc: float = 0.0
    weak_acc_before: float | None = None
    weak_acc_after: float | None = None
    budget_consumed: int = 0
    # (round, client, sample, weak_label, oracle_label, u, provenance)
    audit_rows: list[tuple] = field(default_factory=list)

    def add_row(self, round_index: int, test_acc: float, cum_mb: float, phase: str) -> None:
        if not 0.0 <= test_acc <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        self.rows.append(RoundRow(round_index, test_acc, cum_mb, phase))
        self.final_acc = test_acc

    @property
    def round_count(self) -> int:
        return len(self.rows)
