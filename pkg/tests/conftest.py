import pytest
from fastapi.testclient import TestClient

from main import app
from src.repository.sessions import serialize_stream
from src.schemas.synth import CohortSpec, SessionSpec
from src.servises.synth import generate_session


@pytest.fixture(scope="module")
def client():
    yield TestClient(app)


@pytest.fixture(scope="module")
def session_csv():
    stream, truth = generate_session(
        SessionSpec(n_turns=6, turn_duration=2.2, gyro_noise_sd=0.02, accel_noise_sd=0.05, tilt_deg=10.0, seed=1)
    )
    return serialize_stream(stream, "csv"), truth


@pytest.fixture()
def small_cohort():
    return CohortSpec(n_participants=4, n_days=4, turns_per_test=4, walk_bout=2.0, seed=2)
