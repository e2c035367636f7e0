import math
import os
import sys
import tempfile

sys.path.insert(0, os.environ["LONGRIC_EXT_DIR"])

import numpy as np
import _longric as lr


def test_kernel_eval_and_grad():
    k = lr.GaussianKernel(0.7)
    a = np.array([0.1, -0.4, 1.2])
    b = np.array([0.3, 0.0, 0.9])
    expected = math.exp(-np.sum((a - b) ** 2) / (2 * 0.7**2))
    assert abs(k.eval(a, b) - expected) < 1e-12

    g = k.grad_wrt_second(a, b)
    h = 1e-6
    for j in range(3):
        bp, bm = b.copy(), b.copy()
        bp[j] += h
        bm[j] -= h
        fd = (k.eval(a, bp) - k.eval(a, bm)) / (2 * h)
        assert abs(g[j] - fd) < 1e-6


def test_svm_and_calibration():
    rng = np.random.default_rng(0)
    X = np.vstack(
        [rng.normal(-1.0, 0.6, (40, 2)), rng.normal(1.0, 0.6, (40, 2))]
    )
    y = [0] * 40 + [1] * 40
    model = lr.train_svm(X, y, 1.0, 1.0)
    assert model.converged
    assert lr.kkt_max_violation(model, X, y) <= 1e-3
    assert lr.decision_value(model, np.array([1.0, 1.0])) > 0
    assert lr.decision_value(model, np.array([-1.0, -1.0])) < 0

    clf = lr.train_calibrated(X, y, 1.0, 1.0)
    p_hi = lr.predict_proba(clf, np.array([1.0, 1.0]))
    p_lo = lr.predict_proba(clf, np.array([-1.0, -1.0]))
    assert 0.0 < p_lo < p_hi < 1.0

    x = np.array([0.3, -0.2])
    g = lr.grad_proba(clf, x)
    h = 1e-6
    for j in range(2):
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        fd = (lr.predict_proba(clf, xp) - lr.predict_proba(clf, xm)) / (2 * h)
        assert abs(g[j] - fd) < 1e-5


def test_indirect_regression():
    rng = np.random.default_rng(1)
    xd = rng.normal(size=(50, 2))
    xu = rng.normal(size=(50, 1))
    xi = xd.sum(axis=1, keepdims=True) + 0.1 * rng.normal(size=(50, 1))
    m = lr.fit_indirect(xd, xu, xi, 0.5)
    est = lr.estimate_indirect(m, np.array([0.0]), np.array([0.5, 0.5]))
    assert abs(est[0] - 1.0) < 0.5
    J = lr.grad_indirect_wrt_direct(m, np.array([0.0]), np.array([0.5, 0.5]))
    assert J.shape == (1, 2)


def test_projection():
    origin = np.array([0.5, 0.5])
    costs = np.array([1.0, 1.0])
    signs = np.array([1, -1], dtype=np.int32)
    lower = np.array([0.5, 0.0])
    upper = np.array([1.0, 0.5])
    p = lr.project(origin, costs, signs, lower, upper, 0.3, np.array([2.0, -2.0]))
    assert lower[0] - 1e-12 <= p[0] <= upper[0] + 1e-12
    assert lower[1] - 1e-12 <= p[1] <= upper[1] + 1e-12
    assert (p[0] - origin[0]) + (origin[1] - p[1]) <= 0.3 + 1e-8
    p2 = lr.project(origin, costs, signs, lower, upper, 0.3, p)
    assert np.max(np.abs(p2 - p)) < 1e-10


def test_generate_cohort_files():
    with tempfile.TemporaryDirectory() as d:
        n_visits = lr.generate_cohort_files(50, 2, 1, d)
        assert n_visits == 2
        assert os.path.exists(os.path.join(d, "schema.json"))
        assert os.path.exists(os.path.join(d, "visit1.csv"))
        assert os.path.exists(os.path.join(d, "visit2.csv"))
