from typing import Any, ClassVar, Dict, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

LIST_SEPARATOR = "|"


class TableModel(BaseModel):
    """A typed table row.

    Subclasses set ``table_name`` (the sheet name in xlsx files) and may
    override ``get_field_map`` to rename columns. Fields listed in
    ``list_fields`` are stored as ``|``-joined strings.
    """

    model_config = ConfigDict(from_attributes=True)

    table_name: ClassVar[str]
    list_fields: ClassVar[Tuple[str, ...]] = ()

    @model_validator(mode="before")
    @classmethod
    def parse_cells(cls, values: Any):
        if not isinstance(values, dict):
            return values
        parsed = {}
        for key, value in values.items():
            field = cls.model_fields.get(key)
            if key in cls.list_fields and isinstance(value, str):
                value = [v for v in value.split(LIST_SEPARATOR) if v]
            elif value in ("", None) and field is not None and not field.is_required():
                # empty cell: fall back to the field default
                continue
            parsed[key] = value
        return parsed

    @classmethod
    def get_table_name(cls) -> str:
        return cls.table_name

    @classmethod
    def get_field_map(cls) -> Dict[str, str]:
        """{"field_name": "column name"}; identity unless overridden."""
        return {}

    @classmethod
    def generate_field_map(cls) -> Dict[str, str]:
        """Reverse map, {"column name": "field_name"}."""
        return {v: k for k, v in cls.get_field_map().items()}

    def to_row(self) -> Dict[str, Any]:
        """Cells keyed by column name, ready for a table backend."""
        field_map = self.get_field_map()
        row = {}
        for key, value in self.model_dump(mode="json").items():
            if isinstance(getattr(self, key, None), (set, frozenset)):
                value = sorted(value)
            if isinstance(value, list):
                value = LIST_SEPARATOR.join(str(v) for v in value)
            elif value is None:
                value = ""
            row[field_map.get(key, key)] = value
        return row
