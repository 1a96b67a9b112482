import pytest

from conformal_energy.energy import QuadratureSpec
from energy_cli.commands.studies import PWL_INVERSE_SLOPE, pwl_study, scaled_n, square_study


def test_scaled_n_resolves_the_steep_segment():
    assert scaled_n(256, 0.01) == 512
    assert scaled_n(1024, 0.1) == 1024
    assert scaled_n(256, 0.001, scale=False) == 256


@pytest.fixture(scope="module")
def pwl_table():
    return pwl_study([0.1, 0.01], n=256, refine=1, scheme="midpoint-subtracted", oracle_n=512)


def test_pwl_study_rows(pwl_table):
    frame, _ = pwl_table
    assert frame["lambda"].tolist() == [0.1, 0.01]
    assert frame["n"].tolist() == [256, 512]
    assert list(frame.columns) == [
        "lambda", "log_inv_lambda", "n", "energy", "energy_err", "inverse_energy", "inverse_err", "inverse_oracle",
    ]
    assert (frame["energy"] >= 1.0 - frame["energy_err"]).all()


def test_inverse_energy_grows_as_lambda_shrinks(pwl_table):
    frame, summary = pwl_table
    small = frame.set_index("lambda").loc[0.01]
    assert small["inverse_energy"] >= 1.15
    assert summary["slope"] > 0.0
    assert summary["oracle_slope"] > 0.0
    assert summary["expected_slope"] == PWL_INVERSE_SLOPE
    assert summary["energy_spread"] >= 0.0


def test_single_lambda_has_no_slope():
    _, summary = pwl_study([0.5], n=128, refine=1, scheme="midpoint-subtracted", oracle_n=128)
    assert summary["slope"] is None
    assert summary["energy_spread"] == 0.0


def test_square_study():
    trend, summary = square_study(QuadratureSpec(n=256, refine=1), quadruples=1000, seed=0)
    assert list(trend.columns) == ["delta", "cr_in", "cr_out", "distortion"]
    assert summary["distortion_increasing"]
    assert trend["distortion"].iloc[-1] > 100.0
    assert summary["energy"]["value"] > 1.0
    assert summary["inverse_energy"]["value"] > 1.0
    assert summary["envelope"]["seed"] == 0
