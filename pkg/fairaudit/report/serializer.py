import json
import logging
from pathlib import Path
from typing import Any, Union

from fairaudit.exceptions import StorageError
from fairaudit.models.schemas import AuditReport

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 6


def _canonical(value: Any) -> Any:
    """Round every float to six significant digits, recursing through containers."""
    if isinstance(value, float):
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {key: _canonical(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(item) for item in value]
    return value


def to_json(report: AuditReport) -> bytes:
    """
    Serialize a report to canonical JSON.

    Keys are sorted, floats carry six significant digits and empty lists stay
    lists, so identical reports always produce identical bytes.

    Args:
        report: AuditReport to serialize

    Returns:
        UTF-8 encoded JSON ending in a newline
    """
    document = _canonical(report.model_dump(mode="json"))
    text = json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


def from_json(data: Union[bytes, str]) -> AuditReport:
    """Parse and validate a report produced by to_json."""
    return AuditReport.model_validate_json(data)


def report_schema() -> dict:
    """JSON schema of the report document."""
    return AuditReport.model_json_schema()


def write_schema(path: Union[str, Path]) -> Path:
    """
    Write the published report schema.

    Args:
        path: Destination, conventionally docs/report-schema.json

    Returns:
        The written path
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report_schema(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing report schema to {path}: {str(e)}")
        raise StorageError(f"Could not write {path}: {str(e)}")
    logger.info(f"Report schema written to {path}")
    return path
