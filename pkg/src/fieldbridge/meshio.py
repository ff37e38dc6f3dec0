"""Text file formats for meshes and fields.

Mesh file::

    fieldbridge-mesh 1
    <nverts> <ntris>
    x y                 (nverts lines)
    v0 v1 v2            (ntris lines, 0-based)
    classification      (optional block)
    dim id              (one line per element)

Field file::

    fieldbridge-field 1 <vertices|centroids> <degree>
    <value>             (one per dof)

Coordinates are written with shortest round-trip decimal representation,
so load(save(mesh)) reproduces them bit-exactly.
"""

import numpy as np

from .errors import MeshBuildError, MeshFileError
from .mesh import Field, build_mesh

__all__ = ["load_mesh", "save_mesh", "load_field", "save_field"]

MESH_MAGIC = "fieldbridge-mesh"
FIELD_MAGIC = "fieldbridge-field"
FORMAT_VERSION = 1


def save_mesh(mesh, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{MESH_MAGIC} {FORMAT_VERSION}\n")
        f.write(f"{mesh.nverts} {mesh.nelems}\n")
        for x, y in mesh.coords:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.tris:
            f.write(f"{a} {b} {c}\n")
        f.write("classification\n")
        for d, i in mesh.tri_class:
            f.write(f"{d} {i}\n")


def _parse_ints(text, count, lineno, what):
    parts = text.split()
    if len(parts) != count:
        raise MeshFileError(f"expected {count} integers for {what}, got {text!r}",
                            line=lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise MeshFileError(f"bad integer in {what}: {text!r}", line=lineno) from None


def load_mesh(path):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise MeshFileError("empty mesh file", line=1)
    header = lines[0].split()
    if len(header) != 2 or header[0] != MESH_MAGIC:
        raise MeshFileError(f"bad header {lines[0]!r}, expected "
                            f"'{MESH_MAGIC} {FORMAT_VERSION}'", line=1)
    if header[1] != str(FORMAT_VERSION):
        raise MeshFileError(f"unsupported format version {header[1]}", line=1)
    if len(lines) < 2:
        raise MeshFileError("missing vertex/triangle counts", line=2)
    nv, ne = _parse_ints(lines[1], 2, 2, "counts")
    need = 2 + nv + ne
    if len(lines) < need:
        raise MeshFileError(f"file ends early, expected {need} lines",
                            line=len(lines))
    coords = np.empty((nv, 2), dtype=np.float64)
    for i in range(nv):
        lineno = 3 + i
        parts = lines[2 + i].split()
        if len(parts) != 2:
            raise MeshFileError(f"expected 'x y', got {lines[2 + i]!r}", line=lineno)
        try:
            coords[i, 0] = float(parts[0])
            coords[i, 1] = float(parts[1])
        except ValueError:
            raise MeshFileError(f"bad coordinate {lines[2 + i]!r}",
                                line=lineno) from None
    tris = np.empty((ne, 3), dtype=np.int64)
    for i in range(ne):
        tris[i] = _parse_ints(lines[2 + nv + i], 3, 3 + nv + i, "triangle")
    classification = None
    pos = 2 + nv + ne
    rest = [(pos + j + 1, ln) for j, ln in enumerate(lines[pos:]) if ln.strip()]
    if rest:
        lineno, first = rest[0]
        if first.strip() != "classification":
            raise MeshFileError(f"unexpected trailing content {first!r}", line=lineno)
        body = rest[1:]
        if len(body) != ne:
            raise MeshFileError(
                f"classification block has {len(body)} lines, expected {ne}",
                line=lineno)
        classification = np.empty((ne, 2), dtype=np.int64)
        for j, (ln_no, ln) in enumerate(body):
            classification[j] = _parse_ints(ln, 2, ln_no, "classification")
    try:
        return build_mesh(coords, tris, classification=classification)
    except MeshBuildError as exc:
        raise MeshFileError(f"invalid mesh: {exc}") from exc


def save_field(field, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{FIELD_MAGIC} {FORMAT_VERSION} {field.location} {field.degree}\n")
        for v in field.values:
            f.write(f"{float(v)!r}\n")


def load_field(path, mesh, name=""):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise MeshFileError("empty field file", line=1)
    header = lines[0].split()
    if len(header) != 4 or header[0] != FIELD_MAGIC:
        raise MeshFileError(
            f"bad header {lines[0]!r}, expected "
            f"'{FIELD_MAGIC} {FORMAT_VERSION} <vertices|centroids> <degree>'",
            line=1)
    if header[1] != str(FORMAT_VERSION):
        raise MeshFileError(f"unsupported format version {header[1]}", line=1)
    location = header[2]
    if location not in ("vertices", "centroids"):
        raise MeshFileError(f"unknown dof location {location!r}", line=1)
    try:
        degree = int(header[3])
    except ValueError:
        raise MeshFileError(f"bad degree {header[3]!r}", line=1) from None
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    expected = mesh.nverts if location == "vertices" else mesh.nelems
    if len(body) != expected:
        raise MeshFileError(
            f"field has {len(body)} values but the mesh needs {expected}",
            line=len(lines))
    values = np.empty(expected, dtype=np.float64)
    for j, (lineno, ln) in enumerate(body):
        try:
            values[j] = float(ln)
        except ValueError:
            raise MeshFileError(f"bad value {ln!r}", line=lineno) from None
    return Field(mesh, location, degree, values, name)
