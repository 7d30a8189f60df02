import io
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from fairaudit.exceptions import EmptyInputError, ParseError, SchemaError, StorageError
from fairaudit.models.schemas import CsvSchema, Dataset

logger = logging.getLogger(__name__)


class CSVProcessor:
    """
    Utility class for reading audit datasets from CSV files and writing them back.
    """

    @staticmethod
    def read_frame(path: Union[str, Path]) -> pd.DataFrame:
        """
        Read a CSV file into a frame of raw strings.

        Args:
            path: Path to the CSV file

        Returns:
            DataFrame with every cell kept as text
        """
        path = Path(path)
        if not path.is_file():
            raise StorageError(f"CSV file not found: {path}")
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except pd.errors.EmptyDataError:
            raise EmptyInputError(f"CSV file is empty: {path}")
        except (OSError, UnicodeDecodeError) as e:
            logger.error(f"Error reading CSV file {path}: {str(e)}")
            raise StorageError(f"Could not read {path}: {str(e)}")
        if frame.empty:
            raise EmptyInputError(f"CSV file has a header but no rows: {path}")
        return frame

    @staticmethod
    def parse_binary(frame: pd.DataFrame, column: str) -> np.ndarray:
        """
        Parse one column as 0/1 values.

        Args:
            frame: Raw string frame
            column: Column name

        Returns:
            Integer array of 0/1 values
        """
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        bad = ~values.isin([0, 1])
        if bad.any():
            position = int(np.flatnonzero(bad.to_numpy())[0])
            cell = raw.iloc[position]
            problem = "missing value" if cell == "" else f"non-binary value '{cell}'"
            raise ParseError(
                f"{problem} in column '{column}' at row {position + 1}",
                row=position + 1,
                column=column,
            )
        return values.to_numpy(dtype=np.int64)

    @staticmethod
    def parse_real(frame: pd.DataFrame, column: str) -> np.ndarray:
        """
        Parse one column as finite real values.

        Args:
            frame: Raw string frame
            column: Column name

        Returns:
            Float array
        """
        raw = frame[column].str.strip()
        # Python's float() parses shortest-repr output exactly, so written features round-trip
        values = np.array([_parse_float(cell) for cell in raw], dtype=np.float64)
        bad = ~np.isfinite(values)
        if bad.any():
            position = int(np.flatnonzero(bad)[0])
            cell = raw.iloc[position]
            problem = "missing value" if cell == "" else f"non-numeric value '{cell}'"
            raise ParseError(
                f"{problem} in column '{column}' at row {position + 1}",
                row=position + 1,
                column=column,
            )
        return values

    @staticmethod
    def is_binary_column(frame: pd.DataFrame, column: str) -> bool:
        values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
        return bool(values.isin([0, 1]).all())

    @staticmethod
    def resolve_attributes(frame: pd.DataFrame, schema: CsvSchema) -> List[str]:
        """
        Decide which columns are audit attributes.

        Args:
            frame: Raw string frame
            schema: Column mapping; attributes None means auto-detection

        Returns:
            Attribute column names in file order
        """
        if schema.attributes is not None:
            return list(schema.attributes)
        reserved = {schema.truth_column, schema.prediction_column, *schema.features}
        attributes = []
        for column in frame.columns:
            if column in reserved:
                continue
            if CSVProcessor.is_binary_column(frame, column):
                attributes.append(column)
            else:
                logger.debug(f"Skipping non-binary column '{column}' during attribute detection")
        return attributes

    @staticmethod
    def frame_to_dataset(frame: pd.DataFrame, schema: CsvSchema) -> Dataset:
        """
        Convert a raw frame into a Dataset according to the schema.

        Args:
            frame: Raw string frame
            schema: Column mapping

        Returns:
            Dataset with one record per row
        """
        columns = set(frame.columns)
        if schema.truth_column not in columns:
            raise SchemaError(f"Missing truth column '{schema.truth_column}'")
        has_prediction = schema.prediction_column is not None and schema.prediction_column in columns
        if schema.require_prediction and not has_prediction:
            raise SchemaError(f"Missing prediction column '{schema.prediction_column}'")

        attribute_names = CSVProcessor.resolve_attributes(frame, schema)
        missing = [c for c in attribute_names + list(schema.features) if c not in columns]
        if missing:
            raise SchemaError(f"Missing column(s): {', '.join(missing)}")

        truth = CSVProcessor.parse_binary(frame, schema.truth_column)
        prediction = CSVProcessor.parse_binary(frame, schema.prediction_column) if has_prediction else None
        n = len(frame)
        if attribute_names:
            attributes = np.column_stack([CSVProcessor.parse_binary(frame, c) for c in attribute_names])
        else:
            attributes = np.zeros((n, 0), dtype=np.int64)
        if schema.features:
            features = np.column_stack([CSVProcessor.parse_real(frame, c) for c in schema.features])
        else:
            features = np.zeros((n, 0), dtype=np.float64)

        return Dataset.from_arrays(
            truth=truth,
            prediction=prediction,
            attributes=attributes,
            attribute_names=attribute_names,
            features=features,
            feature_names=list(schema.features),
        )

    @staticmethod
    def dataset_to_text(dataset: Dataset, truth_column: str = "y_true", prediction_column: Optional[str] = "y_pred") -> str:
        """
        Render a dataset in the CSV layout the reader accepts.

        Args:
            dataset: Dataset to write
            truth_column: Header of the label column
            prediction_column: Header of the prediction column

        Returns:
            CSV text with a header row
        """
        arrays = dataset.arrays
        data = {truth_column: arrays.truth}
        if arrays.prediction is not None and prediction_column:
            data[prediction_column] = arrays.prediction
        for i, name in enumerate(dataset.attribute_names):
            data[name] = arrays.attributes[:, i]
        for i, name in enumerate(dataset.feature_names):
            data[name] = arrays.features[:, i]
        buffer = io.StringIO()
        pd.DataFrame(data).to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()


def _parse_float(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        return float("nan")
