import numpy as np
import pytest

import fieldbridge as fb
from fieldbridge.errors import MeshFileError


def test_mesh_round_trip_bit_exact(tmp_path, disk_small):
    p = tmp_path / "disk.mesh"
    fb.save_mesh(disk_small, p)
    m = fb.load_mesh(p)
    assert np.array_equal(m.coords, disk_small.coords)
    assert np.array_equal(m.tris, disk_small.tris)
    assert np.array_equal(m.tri_class, disk_small.tri_class)
    assert m == disk_small


def test_round_trip_awkward_coordinates(tmp_path):
    coords = np.array([[0.1 + 1e-17, 0.2], [1.0, np.pi * 1e-8], [1 / 3, 0.7]])
    m0 = fb.build_mesh(coords, [(0, 1, 2)])
    p = tmp_path / "t.mesh"
    fb.save_mesh(m0, p)
    assert np.array_equal(fb.load_mesh(p).coords, m0.coords)


def test_malformed_header_names_line(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("not-a-mesh 1\n0 0\n")
    with pytest.raises(MeshFileError) as exc:
        fb.load_mesh(p)
    assert exc.value.line == 1


def test_bad_vertex_line(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("fieldbridge-mesh 1\n3 1\n0 0\n1 oops\n0 1\n0 1 2\n")
    with pytest.raises(MeshFileError) as exc:
        fb.load_mesh(p)
    assert exc.value.line == 4


def test_truncated_file(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("fieldbridge-mesh 1\n3 1\n0 0\n1 0\n")
    with pytest.raises(MeshFileError):
        fb.load_mesh(p)


def test_classification_block_round_trip(tmp_path):
    m = fb.disk(1.0, 2)
    p = tmp_path / "c.mesh"
    fb.save_mesh(m, p)
    text = p.read_text().splitlines()
    assert "classification" in text
    m2 = fb.load_mesh(p)
    assert np.array_equal(m2.tri_class, m.tri_class)


def test_field_round_trip(tmp_path, disk_small):
    f = fb.sample_field(disk_small, lambda x, y: np.sin(x) + y, "vertices", 1,
                        name="f")
    p = tmp_path / "f.field"
    fb.save_field(f, p)
    g = fb.load_field(p, disk_small)
    assert np.array_equal(g.values, f.values)
    assert g.location == "vertices" and g.degree == 1

    c = fb.Field(disk_small, "centroids", 0, np.arange(disk_small.nelems, dtype=float))
    fb.save_field(c, tmp_path / "c.field")
    c2 = fb.load_field(tmp_path / "c.field", disk_small)
    assert np.array_equal(c2.values, c.values)


def test_field_wrong_dof_count(tmp_path, disk_small, unit_tri):
    f = fb.sample_field(unit_tri, lambda x, y: x, "vertices", 1)
    p = tmp_path / "f.field"
    fb.save_field(f, p)
    with pytest.raises(MeshFileError):
        fb.load_field(p, disk_small)


def test_field_bad_header(tmp_path, unit_tri):
    p = tmp_path / "f.field"
    p.write_text("fieldbridge-field 1 nowhere 1\n1\n2\n3\n")
    with pytest.raises(MeshFileError) as exc:
        fb.load_field(p, unit_tri)
    assert exc.value.line == 1
