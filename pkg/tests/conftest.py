import pytest

from triggerforge.synthetic import FixtureSpec, generate_fixture


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    """One shared 40-image synthetic dataset with its candidate-mask tree."""
    root = tmp_path_factory.mktemp("fixture")
    dataset_root = root / "clean"
    mask_root = root / "masks"
    generate_fixture(dataset_root, mask_root, FixtureSpec(n_images=40, seed=1))
    return dataset_root, mask_root
