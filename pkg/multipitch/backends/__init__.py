from .csv import CsvDB
from .excel import ExcelDB
