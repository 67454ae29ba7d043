import pytest
import json
import os
import tempfile
import shutil

import numpy as np

from dirichletlab.space import MeasureSpace
from dirichletlab.forms import AnisotropicGraph, PowerSumSquared, QuadraticGraph, QuadraticMatrix
from dirichletlab.sampling import FieldSampler
from dirichletlab.solver_settings import SolverSettings


@pytest.fixture
def rng():
    """Seeded generator shared by sampled tests."""
    return np.random.default_rng(20240611)


@pytest.fixture
def pair_space():
    """Two unit atoms."""
    return MeasureSpace.uniform(2)


@pytest.fixture
def path_space():
    """Three unit atoms on a path."""
    return MeasureSpace.uniform(3)


@pytest.fixture
def weighted_space():
    """Four atoms with non-uniform weights."""
    return MeasureSpace((1.0, 2.0, 0.5, 1.5))


@pytest.fixture
def settings():
    """Default solver settings."""
    return SolverSettings()


@pytest.fixture
def one_edge():
    """E(u) = (u_1 - u_0)^2."""
    return QuadraticGraph(edges=[(0, 1, 1.0)])


@pytest.fixture
def quadratic_path():
    """Weighted quadratic energy on the path 0 - 1 - 2 - 3."""
    return QuadraticGraph(edges=[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0)])


@pytest.fixture
def anisotropic_edge():
    """w+ = 1, w- = 4 on a single edge."""
    return AnisotropicGraph(edges=[(0, 1, 1.0, 4.0)])


@pytest.fixture
def anisotropic_path():
    """Anisotropic energy on the path 0 - 1 - 2 - 3."""
    return AnisotropicGraph(edges=[(0, 1, 1.0, 4.0), (1, 2, 2.0, 0.5), (2, 3, 1.0, 1.0)])


@pytest.fixture
def tv_path():
    """Squared total variation (q = 1) on the path 0 - 1 - 2."""
    return PowerSumSquared(edges=[(0, 1, 1.0), (1, 2, 1.0)], exponent=1.0)


@pytest.fixture
def power_path():
    """q = 1.5 power sum on the path 0 - 1 - 2 - 3."""
    return PowerSumSquared(edges=[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 0.5)], exponent=1.5)


@pytest.fixture
def sum_squared():
    """E(u) = (u_0 + u_1)^2, convex and 2-homogeneous but not Markov."""
    return QuadraticMatrix(matrix=[[1.0, 1.0], [1.0, 1.0]])


CATALOG_FAMILIES = ("quadratic_graph", "anisotropic_graph", "power_sum", "total_variation", "quadratic_matrix")
CATALOG_CASES = [(family, size, kind) for family in CATALOG_FAMILIES for size in (2, 7, 12)
                 for kind in ("gaussian", "piecewise")]


def catalog_form(family, size, rng):
    """A catalog form on a path of `size` points with random positive weights."""
    path = [(i, i + 1, float(w)) for i, w in enumerate(rng.uniform(0.5, 2.0, size - 1))]
    if family == "quadratic_graph":
        return QuadraticGraph(edges=path)
    if family == "anisotropic_graph":
        return AnisotropicGraph(edges=[(i, j, w, float(rng.uniform(0.25, 4.0))) for i, j, w in path])
    if family == "power_sum":
        return PowerSumSquared(edges=path, exponent=1.5)
    if family == "total_variation":
        return PowerSumSquared(edges=path, exponent=1.0)
    factor = rng.standard_normal((size, size))
    matrix = factor.T @ factor / size
    return QuadraticMatrix(matrix=(0.5 * (matrix + matrix.T)).tolist())


@pytest.fixture(params=CATALOG_CASES, ids=lambda case: "-".join(map(str, case)))
def catalog_case(request):
    """(form, space, u) on non-uniform atoms; piecewise fields have flat stretches."""
    family, size, kind = request.param
    rng = np.random.default_rng([CATALOG_FAMILIES.index(family), size, len(kind)])
    form = catalog_form(family, size, rng)
    space = MeasureSpace(tuple(rng.uniform(0.5, 2.0, size)))
    u = FieldSampler(size, rng).field(kind)
    return form, space, u


@pytest.fixture
def temp_config_dir():
    """Temporary directory holding an experiment.json for the one-edge quadratic form."""
    temp_dir = tempfile.mkdtemp()
    config = {
        "space": {"weights": [1.0, 1.0]},
        "form": {"family": "quadratic_graph", "edges": [[0, 1, 1.0]]},
        "command": {
            "audit": {"budget": 60},
            "flow": {"u0": [1.0, -1.0], "t_final": 0.25, "steps": 64},
            "slopes": {"u": [0.0, 1.0], "v": [1.0, 0.0]},
        },
        "seed": 1,
    }
    with open(os.path.join(temp_dir, "experiment.json"), "w") as f:
        json.dump(config, f)

    yield temp_dir

    # Cleanup
    shutil.rmtree(temp_dir)


@pytest.fixture
def temp_output_dir():
    """Empty temporary directory for command outputs."""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)
