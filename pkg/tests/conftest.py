import numpy as np
import pytest

from folia import gallery

TWO_PI = 2 * np.pi


@pytest.fixture(scope="session")
def tilted():
    return gallery.t3_tilted()


@pytest.fixture(scope="session")
def contact():
    return gallery.t3_contact()


@pytest.fixture(scope="session")
def graph_a():
    return gallery.twisted_graph_a()


@pytest.fixture(scope="session")
def graph_b():
    return gallery.twisted_graph_b()


@pytest.fixture(scope="session")
def q2_scene():
    return gallery.q2_box()


@pytest.fixture(scope="session")
def helix():
    return gallery.helix_scene()


@pytest.fixture(scope="session")
def reeb_profile():
    from folia import reeb

    return reeb.solve_cond2(1.0, 0.25, 0.0)


@pytest.fixture(scope="session")
def reeb_sc(reeb_profile):
    from folia import reeb
    from folia.fields import MetricField

    sc = reeb.reeb_scene(reeb_profile)
    # flat chart metric; compatible since (T, ker-frame) is a rotation
    sc.metric = MetricField.parse(
        sc.chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
    )
    return sc
