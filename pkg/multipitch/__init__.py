from .backends import CsvDB, ExcelDB
from .exceptions import MultipitchError
from .interfaces import TableModel

__version__ = "0.1.0"
