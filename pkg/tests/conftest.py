import pytest

from inrc.nn import ModelConfig
from oracles import ACCEPTANCE


@pytest.fixture
def tiny_config():
    return ModelConfig(in_dim=2, out_dim=3, hidden_layers=1, width=4, n_freqs=2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
