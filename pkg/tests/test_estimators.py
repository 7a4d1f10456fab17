import numpy as np
import pytest
from sklearn.base import clone

from flagtomo.bodies import ball, ellipsoid, Ellipsoid
from flagtomo.estimators import ForwardMap, SupportFunctionReconstructor, check_directions, check_flags
from flagtomo.forward import ForwardFlagFunction, write_flag_csv
from flagtomo.frames import flag_to_point

from conftest import constant_flag_function, random_directions


def test_forward_map_transform():
    W = random_directions(5)
    D = np.array([flag_to_point(w, 0.3) for w in W])
    model = ForwardMap(body=ellipsoid(2, 1, 1)).fit()
    out = model.transform(np.hstack([W, D]))
    assert out.shape == (5, 1)
    assert np.allclose(out[:, 0], ForwardFlagFunction(Ellipsoid(2, 1, 1)).values(W, D))
    assert np.allclose(ForwardMap(body={"kind": "ball", "r": 2}).fit_transform(np.hstack([W, D])), 2.0)


def test_flag_validation():
    with pytest.raises(ValueError):
        check_flags([[0, 0, 1, 0, 0, 1]])
    with pytest.raises(ValueError):
        check_flags([[0, 0, 1, 1, 0]])
    with pytest.raises(ValueError):
        check_directions([[0, 0, 0]])


def test_reconstructor_params_and_clone():
    est = SupportFunctionReconstructor(M_phi=32, M_tau=32, N_nu=16)
    assert est.get_params()["M_phi"] == 32
    assert clone(est).get_params() == est.get_params()


def test_reconstructor_predict_and_score(tmp_path):
    X = random_directions(4)
    est = SupportFunctionReconstructor(M_phi=32, M_tau=32, N_nu=16).fit(constant_flag_function(1.3))
    assert np.allclose(est.predict(X), 1.3, atol=1e-8)
    assert est.score(X, np.full(4, 1.3)) > -1e-8
    path = tmp_path / "f.csv"
    write_flag_csv(ForwardFlagFunction(Ellipsoid(2, 1, 1)), path, 24, 48, 32)
    est = SupportFunctionReconstructor(M_phi=32, M_tau=32, N_nu=16).fit(str(path))
    assert est.predict([[1, 0, 0]])[0] == pytest.approx(2.0, abs=1e-2)


def test_reconstructor_rejects_bad_input():
    with pytest.raises(ValueError):
        SupportFunctionReconstructor().fit(42)
    with pytest.raises(ValueError):
        SupportFunctionReconstructor().fit(constant_flag_function()).predict([[1, 2]])
