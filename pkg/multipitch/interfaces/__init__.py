from .base import BaseTableDB
from .model import TableModel
