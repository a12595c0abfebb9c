import pytest
from unittest.mock import Mock
from app.config import Settings, LogLevel, get_settings
from app.services.problem import custom, preset_double_well, preset_triple_well
from app.utils.apnum import with_digits
import logging
from typing import Generator
from click.testing import CliRunner
from prometheus_client import REGISTRY, CollectorRegistry


def pytest_configure(config):
    """Configure pytest"""
    # Suppress logging during tests
    logging.getLogger('asyncio').setLevel(logging.ERROR)
    logging.getLogger('concurrent.futures').setLevel(logging.ERROR)


@pytest.fixture(autouse=True)
def suppress_logging():
    """Suppress logging for specific tests"""
    root_logger = logging.getLogger()
    previous_level = root_logger.getEffectiveLevel()
    root_logger.setLevel(logging.ERROR)
    yield
    root_logger.setLevel(previous_level)


@pytest.fixture(autouse=True)
def fresh_settings() -> Generator[None, None, None]:
    """Settings are cached per process; every test starts from the environment"""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def mock_settings() -> Settings:
    return Settings(
        RPM_PRECISION=None,
        RPM_TARGET_DIGITS=20,
        RPM_DMAX=6,
        RPM_DISPLACEMENT=0,
        RPM_IMAG_KICK=1e-6,
        RPM_MAX_NEWTON_ITERS=60,
        RPM_JOBS=1,
        LOG_LEVEL=LogLevel.WARNING,
    )


@pytest.fixture
def ctx30():
    return with_digits(30)


@pytest.fixture
def ctx50():
    return with_digits(50)


@pytest.fixture
def harmonic():
    """V = x^2, eigenvalues 1, 5, 9, ... (even) and 3, 7, ... (odd)"""
    return custom({2: 1})


@pytest.fixture
def triple_well():
    return preset_triple_well("0.14")


@pytest.fixture
def double_well():
    return preset_double_well("0.30")


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def clean_registry():
    """Provide a clean registry for each test"""
    registry = CollectorRegistry()
    # Store the default registry
    default_registry = REGISTRY
    # Set our clean registry as the default
    from prometheus_client import core
    core.REGISTRY = registry
    yield registry
    # Restore the default registry
    core.REGISTRY = default_registry


@pytest.fixture
def mock_logger():
    mock = Mock(spec=logging.Logger)
    mock.info = Mock()
    mock.error = Mock()
    mock.debug = Mock()
    return mock


@pytest.fixture
def config_file(tmp_path) -> Generator[str, None, None]:
    """Writes a --config file; returns a factory taking its text"""
    def _write(text: str) -> str:
        path = tmp_path / "rpm.conf"
        path.write_text(text)
        return str(path)
    yield _write


@pytest.fixture
def clean_env(monkeypatch, tmp_path) -> Generator[None, None, None]:
    """Drop every solver variable so defaults apply"""
    for key in Settings.model_fields:
        monkeypatch.delenv(key, raising=False)
    # no .env in the working directory either
    monkeypatch.chdir(tmp_path)
    yield
