"""Buyer-side decision layer: score sellers by the closed-form W2 distance,
min-max normalize, rank under the chosen objective, and report
augmentation-robustness deviations."""

import csv
from dataclasses import dataclass
import io
import json
import math

from .errors import (
    EmptyInputError,
    FileFormatError,
    NoCandidatesError,
    NumericInputError,
    ParameterError,
)
from .gaussian_geometry import GaussianSummary, wasserstein2_gaussian

OBJECTIVES = ("diversify", "enrich")


def score(buyer: GaussianSummary, seller: GaussianSummary) -> float:
    return wasserstein2_gaussian(buyer, seller)


def minmax_normalize(raw) -> tuple:
    """Affine map of the scores onto [0, 1].

    Returns (values, degenerate). When max == min every output is 0 and the
    degenerate flag is set, so downstream ranking still works via tie-break.
    """
    values = list(raw)
    if not values:
        raise EmptyInputError("nothing to normalize")
    values = [float(v) for v in values]
    if not all(math.isfinite(v) for v in values):
        raise NumericInputError("scores must be finite")
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values), True
    return [(v - lo) / (hi - lo) for v in values], False


@dataclass(frozen=True)
class SellerScore:
    node_id: str
    raw_w2: float = None
    normalized: float = None
    failed: bool = False
    failure_reason: str = None

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "raw_w2": self.raw_w2,
            "normalized": self.normalized,
            "failed": self.failed,
            "failure_reason": self.failure_reason,
        }


@dataclass(frozen=True)
class RobustnessEntry:
    node_id: str
    baseline_w2: float
    augmented_w2: float
    deviation: float

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "baseline_w2": self.baseline_w2,
            "augmented_w2": self.augmented_w2,
            "deviation": self.deviation,
        }


def rank_sellers(entries, objective: str) -> list:
    """diversify: highest raw score first; enrich: lowest first. Ties break
    by node_id ascending either way."""
    if objective not in OBJECTIVES:
        raise ParameterError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    candidates = [e for e in entries if not e.failed]
    if not candidates:
        raise NoCandidatesError("every seller failed; nothing to rank")
    if objective == "diversify":
        candidates.sort(key=lambda e: (-e.raw_w2, e.node_id))
    else:
        candidates.sort(key=lambda e: (e.raw_w2, e.node_id))
    return [e.node_id for e in candidates]


def robustness_report(buyer: GaussianSummary, seller_baseline: GaussianSummary,
                      seller_augmented: GaussianSummary) -> dict:
    """Distance shift caused by augmenting one seller's data, with the buyer
    summary held fixed."""
    baseline = wasserstein2_gaussian(buyer, seller_baseline)
    augmented = wasserstein2_gaussian(buyer, seller_augmented)
    return {
        "baseline_w2": baseline,
        "augmented_w2": augmented,
        "deviation": abs(baseline - augmented),
    }


@dataclass(frozen=True)
class ValuationReport:
    """Entries are sorted by node_id; ranking covers non-failed sellers."""

    entries: tuple
    objective: str
    ranking: tuple
    params_echo: dict
    degenerate_normalization: bool = False
    robustness: tuple = None

    def entry(self, node_id: str) -> SellerScore:
        for e in self.entries:
            if e.node_id == node_id:
                return e
        raise KeyError(node_id)

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "objective": self.objective,
            "ranking": list(self.ranking),
            "params_echo": self.params_echo,
            "degenerate_normalization": self.degenerate_normalization,
            "robustness": (
                None if self.robustness is None else [r.to_dict() for r in self.robustness]
            ),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValuationReport":
        try:
            entries = tuple(SellerScore(**e) for e in data["entries"])
            robustness = data.get("robustness")
            if robustness is not None:
                robustness = tuple(RobustnessEntry(**r) for r in robustness)
            report = cls(
                entries=entries,
                objective=data["objective"],
                ranking=tuple(data["ranking"]),
                params_echo=dict(data["params_echo"]),
                degenerate_normalization=bool(data["degenerate_normalization"]),
                robustness=robustness,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"malformed valuation report: {exc}") from exc
        if report.objective not in OBJECTIVES:
            raise FileFormatError(f"malformed valuation report: objective {report.objective!r}")
        return report


def build_report(buyer: GaussianSummary, outcomes, objective: str,
                 params_echo: dict) -> ValuationReport:
    """Assemble scores, normalization, and ranking from protocol outcomes.

    outcomes: objects with node_id, summary (None when failed), failure.
    All-failed rounds still produce a report (empty ranking) so the failures
    can be written out and inspected.
    """
    if objective not in OBJECTIVES:
        raise ParameterError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    ordered = sorted(outcomes, key=lambda o: o.node_id)
    raw = {o.node_id: score(buyer, o.summary) for o in ordered if o.summary is not None}
    degenerate = False
    normalized = {}
    if raw:
        values, degenerate = minmax_normalize([raw[nid] for nid in sorted(raw)])
        normalized = dict(zip(sorted(raw), values))
    entries = []
    for o in ordered:
        if o.summary is None:
            entries.append(SellerScore(o.node_id, failed=True,
                                       failure_reason=o.failure or "unknown failure"))
        else:
            entries.append(SellerScore(o.node_id, raw_w2=raw[o.node_id],
                                       normalized=normalized[o.node_id]))
    ranking = tuple(rank_sellers(entries, objective)) if raw else ()
    return ValuationReport(
        entries=tuple(entries),
        objective=objective,
        ranking=ranking,
        params_echo=dict(params_echo),
        degenerate_normalization=degenerate,
    )


def with_robustness(report: ValuationReport, entries) -> ValuationReport:
    return ValuationReport(
        entries=report.entries,
        objective=report.objective,
        ranking=report.ranking,
        params_echo=report.params_echo,
        degenerate_normalization=report.degenerate_normalization,
        robustness=tuple(entries),
    )


def dumps_report(report: ValuationReport) -> str:
    """Canonical serialized form: same notation as the wire payloads."""
    return json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":"),
                      allow_nan=False) + "\n"


def save_report(report: ValuationReport, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_report(report))


def load_report(path) -> ValuationReport:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            f"{path}: not a valid report, parse error at byte {exc.pos}: {exc.msg}"
        ) from exc
    return ValuationReport.from_dict(data)


def _rank_map(report: ValuationReport) -> dict:
    return {node_id: i + 1 for i, node_id in enumerate(report.ranking)}


def render_table(report: ValuationReport) -> str:
    """Aligned columns: node_id | raw_w2 | normalized | rank."""
    ranks = _rank_map(report)
    ordered = sorted(
        report.entries,
        key=lambda e: (ranks.get(e.node_id, len(ranks) + 1), e.node_id),
    )
    rows = [("node_id", "raw_w2", "normalized", "rank")]
    for e in ordered:
        if e.failed:
            rows.append((e.node_id, "-", "-", "-"))
        else:
            rows.append((e.node_id, f"{e.raw_w2:.6f}", f"{e.normalized:.6f}",
                         str(ranks[e.node_id])))
    widths = [max(len(row[col]) for row in rows) for col in range(4)]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    for e in ordered:
        if e.failed:
            lines.append(f"failed: {e.node_id}: {e.failure_reason}")
    if report.degenerate_normalization:
        lines.append("note: all raw scores identical; normalized scores degenerate to 0")
    if report.robustness is not None:
        lines.append("")
        lines.append("robustness (|baseline_w2 - augmented_w2|):")
        for r in report.robustness:
            lines.append(f"  {r.node_id}: baseline {r.baseline_w2!r}, "
                         f"augmented {r.augmented_w2!r}, deviation {r.deviation!r}")
    return "\n".join(lines) + "\n"


def render_csv(report: ValuationReport) -> str:
    """One row per seller; floats as shortest round-trip decimals so the
    file re-parses to identical values."""
    ranks = _rank_map(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node_id", "raw_w2", "normalized", "rank", "failed", "failure_reason"])
    for e in report.entries:
        writer.writerow([
            e.node_id,
            "" if e.raw_w2 is None else repr(float(e.raw_w2)),
            "" if e.normalized is None else repr(float(e.normalized)),
            "" if e.node_id not in ranks else ranks[e.node_id],
            "true" if e.failed else "false",
            e.failure_reason or "",
        ])
    return buf.getvalue()
