from .importer import ImportDescriptor, export_cohort_table, import_vpd, load_descriptor
from .records import (
    PatientRecord, atomic_write_text, check_twins, load_config, read_cohort, write_cohort
)

__all__ = [
    "ImportDescriptor", "export_cohort_table", "import_vpd", "load_descriptor",
    "PatientRecord", "atomic_write_text", "check_twins", "load_config", "read_cohort", "write_cohort",
]
