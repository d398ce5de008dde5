import numpy as np
import pytest

import shapespace as ss


@pytest.fixture(scope="module")
def corpus():
    return ss.synth_corpus(levels=2, count=20, noise=0.1, seed=3)


@pytest.fixture(scope="module")
def aligned(corpus):
    return ss.align_training_set(corpus["shapes"])


def test_wavelet_round_trip():
    h = ss.SubdivisionHierarchy(5, 7, 3)
    grid = np.random.default_rng(0).normal(size=(h.vertex_count, 3))
    back = ss.inverse_transform(ss.forward_transform(grid, h), h)
    assert np.allclose(back, grid, atol=1e-12)


def test_dense_inverse_is_invertible():
    h = ss.SubdivisionHierarchy(5, 7, 1)
    d = ss.dense_inverse_matrix(h)
    assert d.shape == (h.vertex_count, h.vertex_count)
    assert np.linalg.svd(d, compute_uv=False).min() > 1e-10


def test_nearest_neighbor_matches_numpy():
    rng = np.random.default_rng(1)
    cloud = rng.uniform(-10, 10, size=(500, 3))
    index = ss.NearestNeighborIndex(cloud)
    assert len(index) == 500
    for q in rng.uniform(-12, 12, size=(30, 3)):
        i, dist = index.nearest(q)
        assert i == int(np.argmin(np.linalg.norm(cloud - q, axis=1)))
        assert dist == pytest.approx(np.linalg.norm(cloud[i] - q))


def test_gpa_recovers_rotated_copies(corpus):
    base = corpus["shapes"][0]
    angle = 0.7
    rot = np.array([[np.cos(angle), -np.sin(angle), 0], [np.sin(angle), np.cos(angle), 0], [0, 0, 1]])
    result = ss.gpa([base, 2.0 * base @ rot.T + 5.0])
    assert np.abs(result["aligned"][0] - result["aligned"][1]).max() < 1e-7


def test_global_model_reconstructs_training_shapes(aligned):
    model = ss.train_global(aligned, 19)
    assert model.dimension == 19
    assert np.all(np.diff(model.eigenvalues) <= 0)
    s = model.project(aligned[4])
    assert np.abs(model.generate(s) - aligned[4]).max() < 1e-8
    curve = ss.compactness_curve(model)
    assert curve[-1] == pytest.approx(1.0, abs=1e-12)


def test_fits_respect_the_box(corpus, aligned):
    dims = corpus["grid_dims"]
    global_model = ss.train_global(aligned, 10)
    local_model = ss.train_local(aligned, ss.SubdivisionHierarchy(5, 7, 2))
    cloud = ss.sample_surface(aligned[2], dims, 2)

    config = ss.FitConfig()
    config.samples_per_parameter = 6
    g = ss.fit_global(global_model, cloud, config)
    assert np.all(np.abs(g.params) <= global_model.stddevs() + 1e-12)
    assert g.final_energy <= g.initial_energy

    lf = ss.fit_local(local_model, cloud, config)
    assert np.all(np.abs(lf.params) <= local_model.stddevs().reshape(-1) + 1e-12)
    assert lf.energy_evaluations == 3 * local_model.hierarchy.vertex_count * 6
    assert np.all(np.diff(lf.energy_trace) <= 0)


def test_model_file_round_trip(tmp_path, aligned):
    model = ss.train_global(aligned, 5)
    path = tmp_path / "m.ssm"
    ss.save_model(model, path)
    loaded = ss.load_model(path)
    assert isinstance(loaded, ss.GlobalModel)
    assert np.array_equal(loaded.basis, model.basis)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(ss.ModelFormatError):
        ss.load_model(path)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        ss.align(np.zeros((2, 3)), np.zeros((2, 3)))
