"""Instance and result file formats."""
from floorplanner.formats.instance_file import load_instance, parse_instance, write_instance
from floorplanner.formats.result_file import parse_result, write_result
from floorplanner.formats.yal import parse_yal

__all__ = ["load_instance", "parse_instance", "write_instance",
           "parse_result", "write_result", "parse_yal"]
