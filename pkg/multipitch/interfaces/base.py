from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Type, TypeVar

from .model import TableModel

M = TypeVar("M", bound=TableModel)


class BaseTableDB(ABC):
    @abstractmethod
    def insert(self, model: TableModel): ...

    @abstractmethod
    def insert_many(self, models: List[TableModel]): ...

    @abstractmethod
    def get_all(
        self, model: Type[M], filters: Optional[Dict[str, Any]] = None
    ) -> List[M]: ...

    @abstractmethod
    def get_one(self, model: Type[M], filters: Dict[str, Any]) -> M: ...

    @abstractmethod
    def delete_all(self, model: Type[TableModel]): ...

    def replace_all(self, models: List[TableModel]):
        """Overwrite the table with ``models``."""
        if models:
            self.delete_all(type(models[0]))
        self.insert_many(models)

    @staticmethod
    def _matches(item: TableModel, filters: Optional[Dict[str, Any]]) -> bool:
        if not filters:
            return True
        return all(getattr(item, k, None) == v for k, v in filters.items())
