"""Machine-readable run records in CSV and JSON."""

import csv
import io
import json
import math
from typing import Any, Dict, Iterable, List, Optional

from . import __version__
from .models import (
    ConditionRow,
    IncrementProfile,
    KernelSumResult,
    LimitConstant,
    McEstimate,
    RateRegression,
    ScaledLimitRow,
    SmallBallResult,
    TruncationStats,
)

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# chunglil-record schema={SCHEMA_VERSION}"
ROW_FIELDS = ("quantity", "value", "stderr", "reference", "deviation")
NUMERIC_FIELDS = ("value", "stderr", "reference", "deviation")


def row(quantity: str, value: Any, stderr: Optional[float] = None,
        reference: Optional[float] = None, deviation: Optional[float] = None) -> Dict[str, Any]:
    """One reported quantity; deviation defaults to value/reference - 1 for numeric pairs."""
    if deviation is None and _is_number(value) and _is_number(reference) and reference != 0:
        deviation = value / reference - 1.0
    return {
        "quantity": quantity,
        "value": _plain(value),
        "stderr": _plain(stderr),
        "reference": _plain(reference),
        "deviation": _plain(deviation),
    }


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _plain(value: Any) -> Any:
    # numpy scalars and infinities are not JSON-native
    if value is None or isinstance(value, (str, bool)):
        return value
    if isinstance(value, int):
        return value
    number = float(value)
    return number if math.isfinite(number) else repr(number)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


class RecordFormatter:
    """Builds run records and renders them as CSV or JSON."""

    def record(self, command: str, params: Dict[str, Any], seed: Optional[int],
               rows: Iterable[Dict[str, Any]], meta: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        return {
            "schema": SCHEMA_VERSION,
            "command": command,
            "params": dict(params),
            "seed": seed,
            "version": __version__,
            "rows": list(rows),
            "meta": dict(meta or {}),
        }

    def to_json(self, record: Dict[str, Any]) -> str:
        return json.dumps(record, indent=2, sort_keys=True)

    def to_csv(self, record: Dict[str, Any]) -> str:
        """Versioned comment line, header, then one line per quantity."""
        param_keys = sorted(record["params"])
        header = ["command"] + [f"param.{key}" for key in param_keys] + list(ROW_FIELDS) + ["seed", "version"]
        buffer = io.StringIO()
        buffer.write(SCHEMA_LINE + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for item in record["rows"]:
            writer.writerow(
                [record["command"]]
                + [_cell(record["params"][key]) for key in param_keys]
                + [_cell(item.get(field)) for field in ROW_FIELDS]
                + [_cell(record["seed"]), record["version"]]
            )
        return buffer.getvalue()

    def render(self, record: Dict[str, Any], output_format: str) -> str:
        return self.to_json(record) + "\n" if output_format == "json" else self.to_csv(record)

    def numeric_differences(self, expected: Dict[str, Any], actual: Dict[str, Any]) -> List[str]:
        """Row fields that differ between two records of the same command."""
        problems = []
        old_rows = {item["quantity"]: item for item in expected["rows"]}
        new_rows = {item["quantity"]: item for item in actual["rows"]}
        for quantity in sorted(set(old_rows) | set(new_rows)):
            if quantity not in old_rows or quantity not in new_rows:
                problems.append(f"{quantity}: present in only one record")
                continue
            for field in NUMERIC_FIELDS:
                if old_rows[quantity].get(field) != new_rows[quantity].get(field):
                    problems.append(
                        f"{quantity}.{field}: {old_rows[quantity].get(field)!r} != {new_rows[quantity].get(field)!r}"
                    )
        return problems

    # Rows for each result type

    def smallball_rows(self, result: SmallBallResult, asymptotic: float, bounds) -> List[Dict[str, Any]]:
        return [
            row("probability", result.value, stderr=result.error_bound),
            row("representation", result.representation.value),
            row("terms_used", result.terms_used),
            row("asymptotic", asymptotic, reference=result.value),
            row("lower_bound", bounds[0]),
            row("upper_bound", bounds[1]),
        ]

    def constant_rows(self, constant: LimitConstant) -> List[Dict[str, Any]]:
        return [row(f"constant.{constant.theorem.value}", constant.value)]

    def kernel_rows(self, result: KernelSumResult, integral: Optional[float],
                    target: Optional[float]) -> List[Dict[str, Any]]:
        low, high = result.integral_bracket()
        rows = [
            row("partial_sum", result.partial_sum),
            row("tail_bound", result.tail_bound),
            row("head_sum", result.head_sum),
            row("edge_term", result.edge_term),
            row("integral_bracket_low", low, reference=integral, deviation=None if integral is None else low - integral),
            row("integral_bracket_high", high, reference=integral, deviation=None if integral is None else high - integral),
        ]
        rows.append(row("scaled_value", result.scaled_value, reference=target))
        return rows

    def scaled_rows(self, scaled: Iterable[ScaledLimitRow], target: float, label: str = "scaled_value") -> List[Dict[str, Any]]:
        return [row(f"{label}@eps={item.eps!r}", item.scaled_value, reference=target, deviation=item.deviation)
                for item in scaled]

    def mc_rows(self, estimate: McEstimate) -> List[Dict[str, Any]]:
        return [
            row("p_hat", estimate.p_hat, stderr=estimate.stderr, reference=estimate.reference,
                deviation=estimate.deviation),
            row("threshold", estimate.threshold),
            row("model_error_budget", estimate.model_error_budget),
        ]

    def regression_rows(self, regression: RateRegression) -> List[Dict[str, Any]]:
        rows = [
            row(f"p_hat@n={n}", p_hat, stderr=stderr)
            for n, p_hat, stderr in zip(regression.n_grid, regression.p_hats, regression.stderrs)
        ]
        rows.append(row("slope", regression.slope, stderr=regression.slope_stderr,
                        reference=regression.expected_slope,
                        deviation=regression.slope - regression.expected_slope))
        rows.append(row("intercept", regression.intercept))
        rows.append(row("expected_slope", regression.expected_slope))
        return rows

    def truncation_rows(self, stats: TruncationStats) -> List[Dict[str, Any]]:
        rows = [
            row("threshold", stats.threshold),
            row("B_n", stats.B_n),
            row("B_n_over_n_sigma2", stats.B_n_over_n_sigma2, reference=1.0),
            row("B_n_empirical", stats.B_n_empirical, reference=stats.B_n,
                deviation=stats.B_n_empirical - stats.B_n),
            row("variance_deficit", stats.variance_deficit),
        ]
        rows.extend(row(f"delta_{label}", value) for label, value in stats.delta_quantiles.items())
        return rows

    def profile_rows(self, profile: IncrementProfile) -> List[Dict[str, Any]]:
        rows = [row(f"partial_sum@n={n}", value) for n, value in zip(profile.n_grid, profile.partial_sums)]
        rows.extend(row(f"increment@n={n}", value) for n, value in zip(profile.n_grid[1:], profile.increments))
        rows.extend(row(f"increment_ratio@n={n}", value) for n, value in zip(profile.n_grid[2:], profile.ratios))
        rows.append(row("decay_exponent", profile.decay_exponent, reference=-1.0,
                        deviation=profile.decay_exponent + 1.0))
        return rows

    def condition_rows(self, profile: Iterable[ConditionRow]) -> List[Dict[str, Any]]:
        rows = []
        for item in profile:
            rows.append(row(f"tail_second_moment@log_t={item.log_t!r}", item.tail_second_moment))
            rows.append(row(f"profile@log_t={item.log_t!r}", item.value))
        return rows
