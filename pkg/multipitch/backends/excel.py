from typing import Any, Dict, List, Optional, Type

from openpyxl import Workbook, load_workbook
from openpyxl.worksheet.worksheet import Worksheet
from pydantic import ValidationError as PydanticValidationError

from multipitch.exceptions import NotFoundError
from multipitch.interfaces.base import M, BaseTableDB
from multipitch.interfaces.model import TableModel
from multipitch.logger_utils import get_logger

logger = get_logger("exceldb")

DEFAULT_SHEET = "Sheet"


class ExcelDB(BaseTableDB):
    """One xlsx workbook, one worksheet per ``TableModel.table_name``."""

    def __init__(self, file_path: str):
        self.file_path = str(file_path)
        self._workbook: Optional[Workbook] = None
        self._headers: Dict[str, List[str]] = {}

    def _get_workbook(self) -> Workbook:
        if not self._workbook:
            try:
                self._workbook = load_workbook(self.file_path)
            except FileNotFoundError:
                self._workbook = Workbook()
        return self._workbook

    def _save(self):
        workbook = self._get_workbook()
        # drop openpyxl's empty default sheet once real sheets exist
        if DEFAULT_SHEET in workbook.sheetnames and len(workbook.sheetnames) > 1:
            ws = workbook[DEFAULT_SHEET]
            if ws.max_row == 1 and ws.cell(1, 1).value is None:
                workbook.remove(ws)
        workbook.save(self.file_path)

    def _get_worksheet(
        self, sheet_name: str, headers: Optional[List[str]] = None
    ) -> Worksheet:
        workbook = self._get_workbook()
        if sheet_name in workbook.sheetnames:
            return workbook[sheet_name]
        if headers is None:
            raise NotFoundError(
                f"Sheet '{sheet_name}' not found in {self.file_path} and no headers provided to create it."
            )
        ws = workbook.create_sheet(sheet_name)
        ws.append(headers)
        self._headers[sheet_name] = list(headers)
        logger.debug(f"Created new worksheet: {sheet_name} with headers: {headers}")
        return ws

    def _get_headers(self, ws: Worksheet, sheet_name: str) -> List[str]:
        if sheet_name not in self._headers:
            self._headers[sheet_name] = [cell.value for cell in ws[1]]
        return self._headers[sheet_name]

    def insert(self, model: TableModel):
        self.insert_many([model])

    def insert_many(self, models: List[TableModel]):
        if not models:
            return

        sheet_name = models[0].get_table_name()
        mapped_rows = [model.to_row() for model in models]

        ws = self._get_worksheet(sheet_name, headers=list(mapped_rows[0].keys()))
        headers = self._get_headers(ws, sheet_name)
        for row in mapped_rows:
            ws.append([row.get(header, "") for header in headers])

        self._save()
        logger.debug(f"Inserted {len(mapped_rows)} row(s) into {sheet_name}")

    def get_all(
        self, model: Type[M], filters: Optional[Dict[str, Any]] = None
    ) -> List[M]:
        sheet_name = model.get_table_name()
        ws = self._get_worksheet(sheet_name)
        headers = self._get_headers(ws, sheet_name)
        field_map = model.generate_field_map()

        data = []
        for row in ws.iter_rows(min_row=2, values_only=True):
            model_data = {
                field_map.get(header, header): ("" if value is None else value)
                for header, value in zip(headers, row)
            }
            try:
                item = model(**model_data)
            except PydanticValidationError as e:
                logger.error(f"Failed to parse row {row}: {e}")
                continue
            if self._matches(item, filters):
                data.append(item)

        return data

    def get_one(self, model: Type[M], filters: Dict[str, Any]) -> M:
        for item in self.get_all(model, filters):
            return item
        raise NotFoundError(f"Record not found for filters: {filters}")

    def delete_all(self, model: Type[TableModel]):
        """Clear all records on the sheet, keeping the header."""
        sheet_name = model.get_table_name()
        workbook = self._get_workbook()
        if sheet_name not in workbook.sheetnames:
            return
        ws = workbook[sheet_name]
        n_rows = ws.max_row - 1
        if n_rows > 0:
            ws.delete_rows(2, n_rows)
            self._save()
            logger.debug(f"Cleared {n_rows} row(s) from sheet '{sheet_name}'")
