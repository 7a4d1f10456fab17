import numpy as np

from flagtomo.bodies import Ball, Ellipsoid
from flagtomo.mesh import euler_characteristic, latlong_mesh, read_obj, write_obj


def test_ball_mesh_closed_and_on_sphere(tmp_path):
    V, F = latlong_mesh(Ball(1.0), 6, 12)
    assert len(V) == 6 * 12 + 2
    assert euler_characteristic(len(V), F) == 2
    assert np.allclose(np.linalg.norm(V, axis=1), 1.0, atol=1e-8)
    write_obj(tmp_path / "m.obj", V, F, "ball")
    V2, F2 = read_obj(tmp_path / "m.obj")
    assert np.array_equal(V2, V) and np.array_equal(F2, F)


def test_every_edge_shared_by_two_faces():
    _, F = latlong_mesh(Ellipsoid(2, 1, 1), 5, 8)
    edges = {}
    for f in F:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    # consistently oriented closed surface: each directed edge once, its reverse once
    assert all(n == 1 for n in edges.values())
    assert all((b, a) in edges for a, b in edges)


def test_faces_point_outward():
    V, F = latlong_mesh(Ellipsoid(2, 1, 0.5), 8, 16)
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    normal = np.cross(b - a, c - a)
    assert np.all(np.sum(normal * (a + b + c), axis=1) > 0)
