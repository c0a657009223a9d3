import pytest

from foragesim.scenarios import BUILTIN_NAMES, builtin_scenario_text


@pytest.fixture(params=BUILTIN_NAMES)
def builtin_name(request):
    return request.param


@pytest.fixture
def scenario_file(tmp_path):
    """Write scenario text to a temp .scn file and return its path."""

    def write(text, name="scenario.scn"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write


@pytest.fixture
def dual_source_path(scenario_file):
    return scenario_file(builtin_scenario_text("dual_source"), "dual_source.scn")
