from qcat.settings import Settings, parse_dims


def test_default_seed_and_tolerances() -> None:
    settings = Settings(_env_file=None)
    assert settings.seed == 20110101
    assert settings.tolerance == 1e-9
    assert settings.cup_svd_tolerance == 1e-6
    assert settings.amplitude_threshold == 1e-12


def test_default_verification_caps() -> None:
    settings = Settings(_env_file=None)
    assert settings.verify_max_nodes == 20
    assert settings.verify_max_boundary_dim == 4096
    assert settings.verify_trials == 25
    assert parse_dims(settings.verify_dims) == [2, 3, 4, 5]
    assert settings.default_max_steps == 200


def test_seed_is_read_from_environment(monkeypatch) -> None:
    monkeypatch.setenv("QCAT_SEED", "7")
    assert Settings(_env_file=None).seed == 7


def test_parse_dims_skips_invalid_items() -> None:
    assert parse_dims("2, 3,,x,0,-1,5") == [2, 3, 5]
    assert parse_dims("") == []
