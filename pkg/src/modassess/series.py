"""Timestamped strain records: the measurement vector every task consumes.

CSV layout is ``time_min,strain_microeps`` with an optional ``phase``
column (1, 2 or 3).  Files are UTF-8, '.' decimal separator, LF line
endings; floats are written in shortest round-trip form so that
write -> load is an identity.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "StrainSeries",
    "load_csv",
    "write_csv",
    "split_phases",
    "split_train_forecast",
]

CSV_HEADER = "time_min,strain_microeps"


@dataclass(frozen=True)
class StrainSeries:
    """Strain observations (microstrain) at strictly increasing times
    (minutes), optionally carrying experiment-phase labels."""

    times: np.ndarray
    strains: np.ndarray
    phases: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        strains = np.asarray(self.strains, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "strains", strains)
        if times.ndim != 1 or strains.ndim != 1:
            raise DataError("times and strains must be one-dimensional")
        if len(times) != len(strains):
            raise DataError("times and strains must have equal length")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(strains)):
            raise DataError("times and strains must be finite (no NaN/inf)")
        if len(times) > 1 and not np.all(np.diff(times) > 0.0):
            raise DataError("times must be strictly increasing")
        if self.phases is not None:
            phases = np.asarray(self.phases, dtype=int)
            object.__setattr__(self, "phases", phases)
            if phases.shape != times.shape:
                raise DataError("phase labels must match the number of samples")
            if len(phases) and not np.all(np.isin(phases, (1, 2, 3))):
                raise DataError("phase labels must be 1, 2 or 3")

    def __len__(self) -> int:
        return len(self.times)

    def select(self, mask: np.ndarray) -> "StrainSeries":
        return StrainSeries(
            self.times[mask],
            self.strains[mask],
            None if self.phases is None else self.phases[mask],
        )


def write_csv(series: StrainSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        header = CSV_HEADER + (",phase" if series.phases is not None else "")
        f.write(header + "\n")
        for i in range(len(series)):
            row = f"{float(series.times[i])!r},{float(series.strains[i])!r}"
            if series.phases is not None:
                row += f",{int(series.phases[i])}"
            f.write(row + "\n")


def load_csv(path) -> StrainSeries:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header[:2] != ["time_min", "strain_microeps"]:
        raise DataError(f"{path}: expected header '{CSV_HEADER}', got {lines[0]!r}")
    has_phase = len(header) == 3 and header[2] == "phase"
    if len(header) > 2 and not has_phase:
        raise DataError(f"{path}: unrecognized extra columns {header[2:]}")

    times, strains, phases = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
        try:
            times.append(float(cells[0]))
            strains.append(float(cells[1]))
            if has_phase:
                phases.append(int(cells[2]))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if len(times) < 2:
        raise DataError(f"{path}: need at least 2 samples, got {len(times)}")
    try:
        return StrainSeries(
            np.array(times), np.array(strains), np.array(phases) if has_phase else None
        )
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def split_phases(
    series: StrainSeries, boundary1: float, boundary2: float
) -> tuple[StrainSeries, StrainSeries, StrainSeries]:
    """Partition by time: t < b1, b1 <= t < b2, t >= b2.  The union keeps
    every point; emptiness of a member is the caller's concern."""
    if not boundary1 < boundary2:
        raise DataError(f"phase boundaries must increase: {boundary1}, {boundary2}")
    t = series.times
    return (
        series.select(t < boundary1),
        series.select((t >= boundary1) & (t < boundary2)),
        series.select(t >= boundary2),
    )


def split_train_forecast(
    series: StrainSeries, t_split: float, t_min: float = 200.0
) -> tuple[StrainSeries, StrainSeries]:
    """Split into training {t_min <= t < t_split} and forecasting
    {t >= t_split}; points before ``t_min`` are dropped altogether."""
    t = series.times
    train = series.select((t >= t_min) & (t < t_split))
    forecast = series.select(t >= t_split)
    if len(train) == 0:
        raise DataError(f"no training points in [{t_min}, {t_split})")
    if len(forecast) == 0:
        raise DataError(f"no forecast points at t >= {t_split}")
    return train, forecast
