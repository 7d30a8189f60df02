import json
import logging
import os
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from fairaudit.exceptions import ManifestError, StorageError
from fairaudit.models.schemas import AuditReport, LogisticModel, Manifest
from fairaudit.report.markdown import to_markdown
from fairaudit.report.serializer import from_json, to_json

logger = logging.getLogger(__name__)


class JSONStorage:
    """
    Reads and writes audit artifacts (reports, models, manifests) as files
    under one output directory.
    """

    def __init__(self, storage_dir: Union[str, Path]):
        try:
            self.storage_dir = Path(storage_dir)
            os.makedirs(self.storage_dir, exist_ok=True)
            logger.debug(f"JSON storage initialized at: {self.storage_dir}")
        except OSError as e:
            logger.error(f"Failed to initialize JSON storage: {str(e)}")
            raise StorageError(f"Could not create output directory {storage_dir}: {str(e)}")

    def _get_path(self, filename: str) -> Path:
        return self.storage_dir / filename

    def write_file(self, filename: str, data: Union[bytes, str]) -> Path:
        path = self._get_path(filename)
        try:
            if isinstance(data, bytes):
                path.write_bytes(data)
            else:
                path.write_text(data, encoding="utf-8")
        except OSError as e:
            logger.error(f"Error writing {path}: {str(e)}")
            raise StorageError(f"Could not write {path}: {str(e)}")
        logger.info(f"Wrote {path}")
        return path

    def save_report(self, report: AuditReport, formats: Iterable[str] = ("json",), stem: str = "report") -> List[Path]:
        """
        Save a report in the requested formats.

        Args:
            report: Report to save
            formats: Any of 'json' and 'markdown'
            stem: File name without extension

        Returns:
            Written paths, json first
        """
        formats = set(formats)
        written = []
        if "json" in formats:
            written.append(self.write_file(f"{stem}.json", to_json(report)))
        if "markdown" in formats:
            written.append(self.write_file(f"{stem}.md", to_markdown(report)))
        return written

    def load_report(self, stem: str = "report") -> AuditReport:
        path = self._get_path(f"{stem}.json")
        try:
            return from_json(path.read_bytes())
        except OSError as e:
            logger.error(f"Error reading report {path}: {str(e)}")
            raise StorageError(f"Could not read {path}: {str(e)}")

    def save_model(self, model: LogisticModel, filename: str = "model.json") -> Path:
        return self.write_file(filename, save_model_text(model))

    def list_artifacts(self) -> List[str]:
        try:
            return sorted(p.name for p in self.storage_dir.iterdir() if p.is_file())
        except OSError as e:
            logger.error(f"Error listing artifacts: {str(e)}")
            return []


def save_model_text(model: LogisticModel) -> str:
    """Model document: weights, bias, threshold and feature names."""
    return json.dumps(model.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def load_model(path: Union[str, Path]) -> LogisticModel:
    """
    Load a model document written by JSONStorage.save_model.

    Args:
        path: Path to model JSON

    Returns:
        LogisticModel
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Error reading model {path}: {str(e)}")
        raise StorageError(f"Could not read {path}: {str(e)}")
    return LogisticModel.model_validate_json(text)


def load_manifest(path: Union[str, Path]) -> Manifest:
    """
    Load a pre-registration manifest.

    Args:
        path: Path to manifest JSON

    Returns:
        Manifest; unknown metric ids, empty lists and bad alphas raise ManifestError
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Error reading manifest {path}: {str(e)}")
        raise StorageError(f"Could not read {path}: {str(e)}")
    try:
        return Manifest.model_validate_json(text)
    except ValidationError as e:
        logger.error(f"Invalid manifest {path}: {str(e)}")
        raise ManifestError(f"Invalid manifest {path}: {str(e)}")
