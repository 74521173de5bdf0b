import csv
import os
from typing import Any, Dict, List, Optional, Type

from pydantic import ValidationError as PydanticValidationError

from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.interfaces.base import M, BaseTableDB
from multipitch.interfaces.model import TableModel
from multipitch.logger_utils import get_logger

logger = get_logger("csvdb")

CSV_DELIMITER = ";"
CSV_QUOTING = csv.QUOTE_MINIMAL


class CsvDB(BaseTableDB):
    """One table per ``;``-delimited CSV file, header row first.

    With ``strict=True`` a row that does not parse raises ``ValidationError``
    instead of being logged and skipped. Foreign tables such as the MusicNet
    metadata are read with their own ``delimiter``.
    """

    def __init__(self, file_path: str, strict: bool = False, delimiter: str = CSV_DELIMITER):
        self.file_path = str(file_path)
        self.strict = strict
        self.delimiter = delimiter
        self._headers: Optional[List[str]] = None

    def exists(self) -> bool:
        return os.path.exists(self.file_path)

    def _get_headers(self) -> List[str]:
        if self._headers is not None:
            return self._headers

        if not self.exists():
            return []

        with open(self.file_path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f, delimiter=self.delimiter, quoting=CSV_QUOTING)
            self._headers = next(reader, [])
            return self._headers

    def _write_rows(self, headers: List[str], rows: List[List[Any]]):
        directory = os.path.dirname(self.file_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.file_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, delimiter=self.delimiter, quoting=CSV_QUOTING)
            writer.writerow(headers)
            writer.writerows(rows)
        self._headers = list(headers)

    def _append_rows(self, rows: List[List[Any]]):
        with open(self.file_path, "a", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, delimiter=self.delimiter, quoting=CSV_QUOTING)
            writer.writerows(rows)

    def create_table(self, model: Type[TableModel]):
        """Writes an empty table holding only the header row."""
        field_map = model.get_field_map()
        self._write_rows([field_map.get(name, name) for name in model.model_fields], [])

    def insert(self, model: TableModel):
        self.insert_many([model])

    def insert_many(self, models: List[TableModel]):
        if not models:
            return

        mapped_rows = [model.to_row() for model in models]

        headers = self._get_headers()
        if not headers:
            headers = list(mapped_rows[0].keys())
            logger.debug(f"Created new CSV {self.file_path} with headers: {headers}")
            self._write_rows(headers, [])

        self._append_rows([[row.get(h, "") for h in headers] for row in mapped_rows])
        logger.debug(f"Inserted {len(mapped_rows)} row(s) into {self.file_path}")

    def get_all(
        self, model: Type[M], filters: Optional[Dict[str, Any]] = None
    ) -> List[M]:
        if not self.exists():
            return []

        with open(self.file_path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f, delimiter=self.delimiter, quoting=CSV_QUOTING)
            field_map = model.generate_field_map()
            data = []

            for line_no, row in enumerate(reader, start=2):
                mapped_data = {field_map.get(k, k): v for k, v in row.items()}
                try:
                    item = model(**mapped_data)
                except PydanticValidationError as e:
                    if self.strict:
                        raise ValidationError(
                            f"{self.file_path}:{line_no}: cannot parse row: {e}"
                        ) from e
                    logger.error(f"Failed to parse row {row}: {e}")
                    continue

                if self._matches(item, filters):
                    data.append(item)

            return data

    def get_one(self, model: Type[M], filters: Dict[str, Any]) -> M:
        for item in self.get_all(model, filters):
            return item
        raise NotFoundError(f"Record not found in {self.file_path} for filters: {filters}")

    def delete_all(self, model: Type[TableModel]):
        headers = self._get_headers()
        if headers:
            self._write_rows(headers, [])
            logger.debug(f"Cleared all records in {self.file_path}")

    def replace_all(self, models: List[TableModel]):
        if not models:
            self.delete_all(TableModel)
            return
        rows = [model.to_row() for model in models]
        headers = list(rows[0].keys())
        self._write_rows(headers, [[row.get(h, "") for h in headers] for row in rows])
        logger.debug(f"Wrote {len(rows)} row(s) to {self.file_path}")
