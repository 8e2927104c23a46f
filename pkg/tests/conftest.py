import pytest

from digieco.config import ScenarioConfig
from digieco.model import Agent, AgentSequence, Request


@pytest.fixture
def small_cfg():
    return ScenarioConfig(users=12, total_requests=40, communities=3, seeds=(1, 2))


def agent(i, *attrs):
    return Agent(i, attrs)


def seq(*agents):
    return AgentSequence(agents)


def request(*segments):
    return Request([list(s) for s in segments])


def brute_distance(agents, req):
    """Independent oracle: explicit scan over every member attribute."""
    total = 0
    for r in req.flat:
        total += min(abs(r[0] - a[0]) + abs(r[1] - a[1])
                     for ag in agents for a in ag.attributes)
    return total


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
