import json

import numpy as np
import pandas as pd
import pytest

from src.fields import ScalarField, VectorField
from src.utils.export import DataExporter


def test_scalar_field_round_trip(noslip_2d, tmp_path):
    phi = ScalarField(noslip_2d, np.random.default_rng(0).standard_normal(noslip_2d.shape))
    result = DataExporter.export_field(phi, tmp_path / "rho_t_0", t=0.0, quantity="density")
    assert result["status"] == "success"
    meta = json.loads((tmp_path / "rho_t_0.json").read_text())
    assert meta["kind"] == "scalar"
    assert meta["quantity"] == "density"
    assert meta["units"] == "nondimensional"
    assert meta["t"] == 0.0
    loaded = DataExporter.load_field(tmp_path / "rho_t_0.bin")
    assert loaded.grid == noslip_2d
    np.testing.assert_array_equal(loaded.values, phi.values)


def test_vector_field_keeps_its_staggering(noslip_2d, tmp_path):
    rng = np.random.default_rng(1)
    u = VectorField.with_walls(noslip_2d, [rng.standard_normal(noslip_2d.face_shape(a)) for a in range(2)])
    DataExporter.export_field(u, tmp_path / "u")
    meta = json.loads((tmp_path / "u.json").read_text())
    assert meta["shapes"] == [[17, 16], [16, 17]]
    assert meta["quantity"] == "u"
    loaded = DataExporter.load_field(tmp_path / "u")
    for a, b in zip(loaded.components, u.components):
        np.testing.assert_array_equal(a, b)


def test_truncated_payload_is_rejected(noslip_2d, tmp_path):
    DataExporter.export_field(ScalarField.zeros(noslip_2d), tmp_path / "phi")
    payload = tmp_path / "phi.bin"
    payload.write_bytes(payload.read_bytes()[:-8])
    with pytest.raises(ValueError, match="sidecar expects"):
        DataExporter.load_field(payload)


def test_unsupported_field_type(tmp_path):
    result = DataExporter.export_field(np.zeros(4), tmp_path / "raw")
    assert result["status"] == "error"


def test_json_export_replaces_non_finite_values(tmp_path):
    DataExporter.export_to_json({"a": float("nan"), "b": [np.float64(1.5), float("inf")]}, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == {"a": None, "b": [1.5, None]}


def test_empty_csv_keeps_its_header(tmp_path):
    result = DataExporter.export_to_csv([], tmp_path / "rates.csv", columns=["eps", "gap"])
    assert result["status"] == "success"
    assert (tmp_path / "rates.csv").read_text() == "eps,gap\n"


def test_csv_uses_the_fixed_float_format(tmp_path):
    DataExporter.export_to_csv(pd.DataFrame({"x": [0.1]}), tmp_path / "x.csv")
    assert (tmp_path / "x.csv").read_text().splitlines()[1] == "1.000000000000e-01"


def test_plot_script_references_every_point(tmp_path):
    result = DataExporter.write_plot_script(tmp_path, ["eps_0.1", "eps_0.05"])
    assert result["status"] == "success"
    script = (tmp_path / "plot.gp").read_text()
    assert "'rates.csv' using 1:4" in script
    assert "eps_0.05/relent.csv" in script


def test_export_auto_dispatches_on_the_extension(tmp_path):
    assert DataExporter.export_auto({"a": 1}, tmp_path / "a.json")["format"] == "json"
    assert DataExporter.export_auto([{"a": 1}], tmp_path / "a.csv")["format"] == "csv"
    with pytest.raises(ValueError, match="Unsupported file extension"):
        DataExporter.export_auto({"a": 1}, tmp_path / "a.xml")
