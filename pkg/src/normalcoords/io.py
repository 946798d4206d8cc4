"""Mesh and field files: OFF and VTK legacy ASCII.

Polydata files may carry triangles (POLYGONS) or polylines (LINES) together
with POINT_DATA / CELL_DATA channels written as SCALARS or VECTORS. Floats
are written with 17 significant digits, so round trips are exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import MeshError, TriMesh

FORMATS = ("off", "vtk")


class MeshParseError(MeshError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path, self.line = str(path), line


def _fmt(x):
    return "%.17g" % x


def infer_format(path, fmt=None):
    if fmt is not None:
        fmt = fmt.lower()
    else:
        fmt = Path(path).suffix.lower().lstrip(".")
    if fmt not in FORMATS:
        raise ValueError(f"unsupported mesh format {fmt!r}; expected one of {FORMATS}")
    return fmt


def save_mesh(mesh, path, fmt=None):
    fmt = infer_format(path, fmt)
    if fmt == "off":
        _save_off(mesh, path)
    else:
        write_vtk_polydata(path, mesh.vertices, polygons=mesh.faces,
                           point_data=mesh.point_data, cell_data=mesh.cell_data)


def load_mesh(path, fmt=None):
    fmt = infer_format(path, fmt)
    if fmt == "off":
        return _load_off(path)
    doc = read_vtk_polydata(path)
    if doc["polygons"] is None:
        raise MeshParseError(path, 0, "no POLYGONS section")
    return TriMesh(doc["points"], doc["polygons"], point_data=doc["point_data"],
                   cell_data=doc["cell_data"])


# ----------------------------------------------------------------------------- OFF

def _save_off(mesh, path):
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    lines += [" ".join(_fmt(c) for c in v) for v in mesh.vertices]
    lines += ["3 " + " ".join(str(int(i)) for i in f) for f in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


class _Tokens:
    """Whitespace tokens with their 1-based line numbers; '#' starts a comment."""

    def __init__(self, path):
        self.path = path
        self.items = []
        with open(path) as fh:
            for no, line in enumerate(fh, 1):
                for tok in line.split("#", 1)[0].split():
                    self.items.append((tok, no))
        self.pos = 0

    @property
    def line(self):
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else 0

    def error(self, message):
        return MeshParseError(self.path, self.line, message)

    def peek(self):
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def next(self):
        if self.pos >= len(self.items):
            raise self.error("unexpected end of file")
        tok = self.items[self.pos][0]
        self.pos += 1
        return tok

    def ints(self, n):
        return [self._conv(int, "integer") for _ in range(n)]

    def floats(self, n):
        return [self._conv(float, "number") for _ in range(n)]

    def _conv(self, typ, what):
        line = self.line
        tok = self.next()
        try:
            return typ(tok)
        except ValueError:
            raise MeshParseError(self.path, line, f"expected {what}, got {tok!r}") from None


def _load_off(path):
    tk = _Tokens(path)
    head = tk.next()
    if head != "OFF":
        tk.pos -= 1
        raise tk.error(f"expected 'OFF' header, got {head!r}")
    nv, nf, _ = tk.ints(3)
    verts = np.array(tk.floats(3 * nv), dtype=float).reshape(nv, 3)
    faces = np.empty((nf, 3), dtype=np.int64)
    for j in range(nf):
        line = tk.line
        k = tk.ints(1)[0]
        if k != 3:
            raise MeshParseError(path, line, f"only triangles are supported, got a {k}-gon")
        idx = tk.ints(3)
        for i in idx:
            if not 0 <= i < nv:
                raise MeshParseError(path, line, f"face index {i} out of range [0, {nv})")
        faces[j] = idx
    return TriMesh(verts, faces)


# ----------------------------------------------------------------------------- VTK

def _data_block(kind, n, channels):
    out = []
    if not channels:
        return out
    out.append(f"{kind} {n}")
    for name, arr in channels.items():
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 3:
            out.append(f"VECTORS {name} double")
            out += [" ".join(_fmt(c) for c in row) for row in arr]
        else:
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out += [_fmt(x) for x in arr.reshape(-1)]
    return out


def write_vtk_polydata(path, points, polygons=None, lines=None, point_data=None, cell_data=None,
                       title="normalcoords"):
    """Write polydata; ``lines`` is a list of index sequences (one polyline each)."""
    points = np.asarray(points, dtype=float)
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET POLYDATA",
           f"POINTS {len(points)} double"]
    out += [" ".join(_fmt(c) for c in p) for p in points]
    n_cells = 0
    if polygons is not None and len(polygons):
        polygons = np.asarray(polygons, dtype=np.int64)
        out.append(f"POLYGONS {len(polygons)} {4 * len(polygons)}")
        out += ["3 " + " ".join(str(int(i)) for i in f) for f in polygons]
        n_cells += len(polygons)
    if lines is not None and len(lines):
        size = sum(len(l) + 1 for l in lines)
        out.append(f"LINES {len(lines)} {size}")
        out += [f"{len(l)} " + " ".join(str(int(i)) for i in l) for l in lines]
        n_cells += len(lines)
    out += _data_block("POINT_DATA", len(points), point_data)
    out += _data_block("CELL_DATA", n_cells, cell_data)
    Path(path).write_text("\n".join(out) + "\n")


def _read_channels(tk, n, store):
    while tk.peek() in ("SCALARS", "VECTORS", "FIELD"):
        kind = tk.next()
        if kind == "FIELD":
            raise tk.error("FIELD data is not supported")
        name = tk.next()
        tk.next()  # data type
        if kind == "SCALARS":
            ncomp = 1
            if tk.peek() is not None and tk.peek().isdigit():
                ncomp = int(tk.next())
            if tk.peek() == "LOOKUP_TABLE":
                tk.next()
                tk.next()
            vals = np.array(tk.floats(n * ncomp))
            store[name] = vals if ncomp == 1 else vals.reshape(n, ncomp)
        else:
            store[name] = np.array(tk.floats(3 * n)).reshape(n, 3)


def read_vtk_polydata(path):
    """Parse an ASCII polydata file into a dict (points, polygons, lines, point_data, cell_data)."""
    tk = _Tokens(path)
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("# vtk DataFile"):
        raise MeshParseError(path, 1, "missing '# vtk DataFile' header")
    # the title line is free text; skip tokens on lines 1 and 2
    while tk.pos < len(tk.items) and tk.items[tk.pos][1] <= 2:
        tk.pos += 1
    fmt = tk.next()
    if fmt != "ASCII":
        tk.pos -= 1
        raise tk.error(f"only ASCII files are supported, got {fmt!r}")
    if tk.next() != "DATASET" or tk.next() != "POLYDATA":
        tk.pos -= 1
        raise tk.error("expected 'DATASET POLYDATA'")
    doc = {"points": None, "polygons": None, "lines": None, "point_data": {}, "cell_data": {}}
    n_cells = 0
    while tk.peek() is not None:
        line = tk.line
        key = tk.next()
        if key == "POINTS":
            n = tk.ints(1)[0]
            tk.next()
            doc["points"] = np.array(tk.floats(3 * n)).reshape(n, 3)
        elif key in ("POLYGONS", "LINES"):
            count, _ = tk.ints(2)
            cells = []
            npts = 0 if doc["points"] is None else len(doc["points"])
            for _ in range(count):
                cl = tk.line
                k = tk.ints(1)[0]
                idx = tk.ints(k)
                if any(not 0 <= i < npts for i in idx):
                    raise MeshParseError(path, cl, f"cell index out of range [0, {npts})")
                if key == "POLYGONS" and k != 3:
                    raise MeshParseError(path, cl, f"only triangles are supported, got a {k}-gon")
                cells.append(idx)
            n_cells += count
            if key == "POLYGONS":
                doc["polygons"] = np.array(cells, dtype=np.int64).reshape(-1, 3)
            else:
                doc["lines"] = [np.array(c, dtype=np.int64) for c in cells]
        elif key == "POINT_DATA":
            _read_channels(tk, tk.ints(1)[0], doc["point_data"])
        elif key == "CELL_DATA":
            _read_channels(tk, tk.ints(1)[0], doc["cell_data"])
        else:
            raise MeshParseError(path, line, f"unexpected keyword {key!r}")
    if doc["points"] is None:
        raise MeshParseError(path, tk.line, "no POINTS section")
    return doc


def write_vtk_structured_points(path, origin, spacing, values, name="F", extra=None):
    """Write a scalar grid; ``values`` has shape (nx, ny, nz), x varying fastest on disk."""
    values = np.asarray(values, dtype=float)
    nx, ny, nz = values.shape
    out = ["# vtk DataFile Version 3.0", "normalcoords grid", "ASCII", "DATASET STRUCTURED_POINTS",
           f"DIMENSIONS {nx} {ny} {nz}", "ORIGIN " + " ".join(_fmt(o) for o in origin),
           f"SPACING {_fmt(spacing)} {_fmt(spacing)} {_fmt(spacing)}", f"POINT_DATA {values.size}"]
    for nm, arr in [(name, values)] + list((extra or {}).items()):
        out.append(f"SCALARS {nm} double 1")
        out.append("LOOKUP_TABLE default")
        out += [_fmt(x) for x in np.asarray(arr, dtype=float).ravel(order="F")]
    Path(path).write_text("\n".join(out) + "\n")


def read_vtk_structured_points(path):
    tk = _Tokens(path)
    while tk.pos < len(tk.items) and tk.items[tk.pos][1] <= 2:
        tk.pos += 1
    tk.next()
    tk.next()
    if tk.next() != "STRUCTURED_POINTS":
        raise tk.error("expected STRUCTURED_POINTS")
    dims = origin = spacing = None
    data = {}
    while tk.peek() is not None:
        key = tk.next()
        if key == "DIMENSIONS":
            dims = tuple(tk.ints(3))
        elif key == "ORIGIN":
            origin = np.array(tk.floats(3))
        elif key in ("SPACING", "ASPECT_RATIO"):
            spacing = np.array(tk.floats(3))
        elif key == "POINT_DATA":
            _read_channels(tk, tk.ints(1)[0], data)
        else:
            raise tk.error(f"unexpected keyword {key!r}")
    data = {k: v.reshape(dims, order="F") for k, v in data.items()}
    return {"dims": dims, "origin": origin, "spacing": spacing, "point_data": data}


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) if isinstance(x, (float, np.floating)) else str(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
