import os

from _pytest.config import Config
from _pytest.config.argparsing import Parser
from coveo_testing.markers import register_markers

from test_label_subversion.data_mock.fixtures import DATA_DIRECTORY_VARIABLE


def pytest_addoption(parser: Parser) -> None:
    parser.addoption(
        "--data-dir",
        default=None,
        help=f"Directory of real dataset csv exports; same as setting {DATA_DIRECTORY_VARIABLE}.",
    )


def pytest_configure(config: Config) -> None:
    register_markers(config)
    # collection happens after configure: the real-data skips see the option.
    if data_dir := config.getoption("--data-dir"):
        os.environ[DATA_DIRECTORY_VARIABLE] = str(data_dir)
