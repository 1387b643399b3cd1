"""
Data Export Utilities
Writes study tables, reports, field snapshots and the plotting script
"""

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from ..fields.grid import GridSpec, ScalarField, VectorField

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"
FIELD_DTYPE = "<f8"


def _success(output_path: Path, records: int, fmt: str, **extra) -> dict:
    file_size = output_path.stat().st_size
    logger.info(f"Exported {records} records to {output_path} ({file_size} bytes)")
    return {
        "status": "success",
        "file_path": str(output_path.absolute()),
        "records_exported": records,
        "file_size_bytes": file_size,
        "format": fmt,
        **extra,
    }


def _failure(what: str, e: Exception) -> dict:
    logger.error(f"Failed to export {what}: {str(e)}")
    return {"status": "error", "error": str(e), "error_type": type(e).__name__}


def _jsonable(value):
    """Replace non-finite floats and numpy scalars so the output is strict JSON"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class DataExporter:
    """Utility class for writing laboratory outputs"""

    @staticmethod
    def export_to_json(data: dict | list, file_path, pretty: bool = True, create_dirs: bool = True) -> dict:
        """
        Export data to a JSON file with sorted keys

        Args:
            data: Data to export (list of dicts or single dict)
            file_path: Output file path
            pretty: Indent the output (default: True)
            create_dirs: Create parent directories if they don't exist (default: True)

        Returns:
            Dictionary with export details:
                - status: 'success' or 'error'
                - file_path: Full path to exported file
                - records_exported: Number of records exported
                - file_size_bytes: Size of exported file in bytes
                - error: Error message (if status is 'error')
        """
        try:
            output_path = Path(file_path)
            if create_dirs:
                output_path.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(data, list):
                record_count = len(data)
            elif isinstance(data, dict):
                record_count = 1
            else:
                raise ValueError(f"Unsupported data type: {type(data)}")
            with open(output_path, "w", encoding="utf-8") as f:
                json.dump(_jsonable(data), f, indent=2 if pretty else None, sort_keys=True, ensure_ascii=False)
                f.write("\n")
            return _success(output_path, record_count, "json")
        except Exception as e:
            return _failure("JSON", e)

    @staticmethod
    def export_to_csv(data, file_path, columns: list[str] | None = None, create_dirs: bool = True) -> dict:
        """
        Export a DataFrame or a list of dicts to CSV with a fixed float format

        An empty table still writes its header when columns are known.

        Args:
            data: pandas DataFrame or list of dictionaries
            file_path: Output file path
            columns: Column order (default: the frame's own)
            create_dirs: Create parent directories if they don't exist (default: True)

        Returns:
            Dictionary with export details, including the column list
        """
        try:
            frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(list(data), columns=columns)
            if columns is not None:
                frame = frame.reindex(columns=columns)
            output_path = Path(file_path)
            if create_dirs:
                output_path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(output_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            return _success(output_path, len(frame), "csv", columns=list(frame.columns))
        except Exception as e:
            return _failure("CSV", e)

    @staticmethod
    def export_field(
        field,
        file_path,
        t: float | None = None,
        quantity: str | None = None,
        units: str = "nondimensional",
        create_dirs: bool = True,
    ) -> dict:
        """
        Write a field as raw little-endian float64 plus a JSON sidecar

        The sidecar (same stem, .json) records the grid, time, quantity, units,
        the kind and the shape of every stored array; vector components follow
        each other. The quantity defaults to the file stem.
        """
        try:
            output_path = Path(file_path).with_suffix(".bin")
            if create_dirs:
                output_path.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(field, ScalarField):
                kind, arrays = "scalar", [field.values]
            elif isinstance(field, VectorField):
                kind, arrays = "vector", list(field.components)
            else:
                raise ValueError(f"Unsupported field type: {type(field)}")
            with open(output_path, "wb") as f:
                for arr in arrays:
                    f.write(np.ascontiguousarray(arr, dtype=FIELD_DTYPE).tobytes())
            sidecar = {
                "kind": kind,
                "grid": field.grid.to_dict(),
                "shapes": [list(a.shape) for a in arrays],
                "dtype": FIELD_DTYPE,
                "t": t,
                "quantity": quantity or output_path.stem,
                "units": units,
            }
            with open(output_path.with_suffix(".json"), "w", encoding="utf-8") as f:
                json.dump(sidecar, f, indent=2, sort_keys=True)
            return _success(output_path, len(arrays), "bin", sidecar=str(output_path.with_suffix(".json")))
        except Exception as e:
            return _failure("field", e)

    @staticmethod
    def load_field(file_path):
        """
        Read a field written by export_field

        Raises:
            ValueError: If the payload size disagrees with the sidecar
        """
        path = Path(file_path).with_suffix(".bin")
        meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
        grid = GridSpec.from_dict(meta["grid"])
        raw = np.fromfile(path, dtype=meta.get("dtype", FIELD_DTYPE))
        sizes = [int(np.prod(s)) for s in meta["shapes"]]
        if raw.size != sum(sizes):
            raise ValueError(f"Field payload {path} holds {raw.size} values, sidecar expects {sum(sizes)}")
        arrays, start = [], 0
        for shape, size in zip(meta["shapes"], sizes):
            arrays.append(raw[start : start + size].reshape(shape).astype(float))
            start += size
        if meta["kind"] == "scalar":
            return ScalarField(grid, arrays[0])
        return VectorField(grid, tuple(arrays))

    @staticmethod
    def write_plot_script(directory, point_dirs: list[str], create_dirs: bool = True) -> dict:
        """
        Write plot.gp: gap-vs-eps on log-log axes, energy ledgers and relative entropy per point

        Args:
            directory: Study output directory holding rates.csv
            point_dirs: Point subdirectories, each with ledger.csv and relent.csv
        """
        try:
            output_path = Path(directory) / "plot.gp"
            if create_dirs:
                output_path.parent.mkdir(parents=True, exist_ok=True)
            lines = [
                "set datafile separator ','",
                "set key autotitle columnhead",
                "set terminal pngcairo size 900,600",
                "",
                "set output 'rates.png'",
                "set logscale xy",
                "set xlabel 'eps'",
                "set ylabel 'sup gap'",
                "plot 'rates.csv' using 1:4 with linespoints title 'velocity gap', \\",
                "     'rates.csv' using 1:5 with linespoints title 'density gap', \\",
                "     'rates.csv' using 1:6 with lines dashtype 2 title 'rate bound'",
                "unset logscale",
            ]
            for name in point_dirs:
                lines += [
                    "",
                    f"set output '{name}_ledger.png'",
                    "set xlabel 't'",
                    "set ylabel 'energy'",
                    f"plot '{name}/ledger.csv' using 1:2 with lines title 'kinetic', \\",
                    f"     '{name}/ledger.csv' using 1:4 with lines title 'relative potential', \\",
                    f"     '{name}/ledger.csv' using 1:5 with lines title 'dissipation'",
                    "",
                    f"set output '{name}_relent.png'",
                    "set ylabel 'relative entropy'",
                    f"plot '{name}/relent.csv' using 1:2 with lines title 'E', \\",
                    f"     '{name}/relent.csv' using 1:8 with lines title 'LHS - RHS'",
                ]
            lines += ["", "unset output", ""]
            output_path.write_text("\n".join(lines), encoding="utf-8")
            return _success(output_path, len(point_dirs), "gnuplot")
        except Exception as e:
            return _failure("plot script", e)

    @staticmethod
    def export_auto(data, file_path, create_dirs: bool = True) -> dict:
        """
        Detect the format from the file extension and export

        Raises:
            ValueError: If the file extension is not supported
        """
        extension = Path(file_path).suffix.lower()
        if extension == ".json":
            return DataExporter.export_to_json(data, file_path, create_dirs=create_dirs)
        if extension == ".csv":
            return DataExporter.export_to_csv(data, file_path, create_dirs=create_dirs)
        if extension == ".bin":
            return DataExporter.export_field(data, file_path, create_dirs=create_dirs)
        raise ValueError(f"Unsupported file extension '{extension}'. Supported formats: .json, .csv, .bin")
