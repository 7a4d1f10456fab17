"""Triangulated boundary surfaces from support functions (OBJ export)."""

from __future__ import annotations

import numpy as np

from .bodies import SupportFunction, equiangular_grid, surface_point
from .frames import CANONICAL, Frame, to_cartesian


def latlong_mesh(H: SupportFunction, n_nu: int, n_tau: int, frame: Frame = CANONICAL):
    """Vertices and triangles of the boundary over a lat-long normal grid.

    Rings of ``n_tau`` vertices at the cell-centred latitudes are joined by
    two triangles per quad and each pole vertex is fanned to its nearest
    ring.  Triangles are oriented outward; indices are 0-based.
    """
    nu, tau = equiangular_grid(n_nu, n_tau)
    N, T = np.meshgrid(nu, tau, indexing="ij")
    normals = np.concatenate([
        -frame.pole.vec[None],
        to_cartesian(N, T, frame).reshape(-1, 3),
        frame.pole.vec[None],
    ])
    verts = surface_point(H, normals).position

    def vid(i, j):
        return 1 + i * n_tau + (j % n_tau)

    south, north = 0, 1 + n_nu * n_tau
    faces = []
    for j in range(n_tau):
        faces.append((south, vid(0, j + 1), vid(0, j)))
    for i in range(n_nu - 1):
        for j in range(n_tau):
            a, b = vid(i, j), vid(i, j + 1)
            c, d = vid(i + 1, j + 1), vid(i + 1, j)
            faces.append((a, b, c))
            faces.append((a, c, d))
    for j in range(n_tau):
        faces.append((north, vid(n_nu - 1, j), vid(n_nu - 1, j + 1)))
    return verts, np.array(faces, dtype=int)


def euler_characteristic(n_vertices: int, faces) -> int:
    faces = np.asarray(faces)
    edges = {tuple(sorted(e)) for f in faces for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0]))}
    return n_vertices - len(edges) + len(faces)


def write_obj(path, verts, faces, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for v in verts:
            fh.write("v %.17g %.17g %.17g\n" % tuple(v))
        for f in faces:
            fh.write("f %d %d %d\n" % tuple(np.asarray(f) + 1))


def read_obj(path):
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(verts), np.array(faces, dtype=int)
