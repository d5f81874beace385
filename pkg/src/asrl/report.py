"""Benchmark report: one dataset, four losses, five metrics.

On disk a report is a flat ``key = value`` text file, one entry per line,
keys sorted within fixed sections, floats written with ``repr`` so they
round-trip exactly. Lines starting with ``#`` are comments. Schema
(format_version 1)::

    format_version = 1
    dataset = <name>
    source = <registry:name | path>
    n_rows / n_train / n_test = <int>
    split.seed / split.test_fraction / split.hash
    config.<TrainConfig field> = <value>       (one line per field)
    config.hash = <hex>
    loss.asrl.q_low / loss.asrl.q_high / loss.asrl.eps / loss.huber.delta
    concurrent = true | false
    losses = asrl,squared,absolute,huber
    result.<loss>.<mse|mae|r2|recall> = <float>
    result.<loss>.split_hash / result.<loss>.config_hash = <hex>
    result.<loss>.train_seconds = <float>      (timing; ignored by comparisons)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from asrl.errors import DataError, InvariantError
from asrl.metrics import EvalReport

__all__ = [
    "FORMAT_VERSION",
    "LOSS_ORDER",
    "LOSS_LABELS",
    "BenchReport",
    "format_report",
    "parse_report",
    "read_report",
    "write_report",
    "format_table",
    "format_summary",
]

FORMAT_VERSION = 1
LOSS_ORDER = ("asrl", "squared", "absolute", "huber")
LOSS_LABELS = {"asrl": "ASRL", "squared": "MSE (LS)", "absolute": "MAE (LS)", "huber": "Huber"}
_METRICS = ("mse", "mae", "r2", "recall")
_TIMING_SUFFIX = ".train_seconds"


@dataclass
class BenchReport:
    dataset: str
    results: dict[str, EvalReport]
    meta: dict[str, str] = field(default_factory=dict)
    split_hashes: dict[str, str] = field(default_factory=dict)
    config_hashes: dict[str, str] = field(default_factory=dict)

    def check_controlled(self) -> None:
        """Raise InvariantError unless every loss saw the same split and config."""
        if len(set(self.split_hashes.values())) > 1:
            raise InvariantError(f"split differs across losses: {self.split_hashes}")
        if len(set(self.config_hashes.values())) > 1:
            raise InvariantError(f"train config differs across losses: {self.config_hashes}")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_report(report: BenchReport, include_timing: bool = True) -> str:
    lines = ["# asrl benchmark report", f"format_version = {FORMAT_VERSION}", f"dataset = {report.dataset}"]
    for k, v in report.meta.items():
        lines.append(f"{k} = {_fmt(v)}")
    losses = [name for name in LOSS_ORDER if name in report.results]
    losses += [name for name in report.results if name not in LOSS_ORDER]
    lines.append("losses = " + ",".join(losses))
    for name in losses:
        ev = report.results[name]
        for m in _METRICS:
            lines.append(f"result.{name}.{m} = {_fmt(float(getattr(ev, m)))}")
        if name in report.split_hashes:
            lines.append(f"result.{name}.split_hash = {report.split_hashes[name]}")
        if name in report.config_hashes:
            lines.append(f"result.{name}.config_hash = {report.config_hashes[name]}")
        if include_timing:
            lines.append(f"result.{name}{_TIMING_SUFFIX} = {_fmt(float(ev.train_seconds))}")
    return "\n".join(lines) + "\n"


def parse_report(text: str, origin: str = "<report>") -> BenchReport:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DataError(f"{origin}:{lineno}: expected 'key = value'")
        kv[key.strip()] = val.strip()
    if kv.get("format_version") != str(FORMAT_VERSION):
        raise DataError(f"{origin}: unsupported or missing format_version {kv.get('format_version')!r}")
    if "dataset" not in kv or "losses" not in kv:
        raise DataError(f"{origin}: missing 'dataset' or 'losses'")
    results, split_h, config_h = {}, {}, {}
    try:
        for name in kv["losses"].split(","):
            vals = {m: float(kv[f"result.{name}.{m}"]) for m in _METRICS}
            secs = float(kv.get(f"result.{name}{_TIMING_SUFFIX}", "0"))
            results[name] = EvalReport(train_seconds=secs, **vals)
            if f"result.{name}.split_hash" in kv:
                split_h[name] = kv[f"result.{name}.split_hash"]
            if f"result.{name}.config_hash" in kv:
                config_h[name] = kv[f"result.{name}.config_hash"]
    except (KeyError, ValueError) as exc:
        raise DataError(f"{origin}: malformed result entry ({exc})") from None
    reserved = {"format_version", "dataset", "losses"}
    meta = {k: v for k, v in kv.items() if k not in reserved and not k.startswith("result.")}
    return BenchReport(kv["dataset"], results, meta, split_h, config_h)


def write_report(report: BenchReport, path) -> None:
    Path(path).write_text(format_report(report), encoding="utf-8")


def read_report(path) -> BenchReport:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc.strerror}") from None
    return parse_report(text, str(path))


def _num(v: float) -> str:
    if abs(v) >= 100:
        return f"{v:.2f}"
    if abs(v) >= 10:
        return f"{v:.3f}"
    return f"{v:.4f}"


def format_table(report: BenchReport) -> str:
    """Aligned text table: metrics as rows, losses as columns."""
    losses = [n for n in LOSS_ORDER if n in report.results]
    headers = ["Metric"] + [LOSS_LABELS.get(n, n) for n in losses]
    rows = []
    for label, attr in (("MSE", "mse"), ("MAE", "mae"), ("R2", "r2"), ("Recall", "recall"), ("Time (s)", "train_seconds")):
        rows.append([label] + [_num(getattr(report.results[n], attr)) for n in losses])
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    out = [f"Comparison based on {report.dataset} dataset"]
    out.append("  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(headers, widths))))
    for r in rows:
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(out) + "\n"


def format_summary(grid: dict[str, dict[str, float]]) -> str:
    """CSV grid of test MSE: one row per dataset, one column per loss."""
    losses = [n for n in LOSS_ORDER if any(n in row for row in grid.values())]
    lines = ["dataset," + ",".join(LOSS_LABELS[n] for n in losses)]
    for ds, row in grid.items():
        lines.append(ds + "," + ",".join(repr(row[n]) if n in row else "" for n in losses))
    return "\n".join(lines) + "\n"
