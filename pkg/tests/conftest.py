from hypothesis import settings

settings.register_profile("pbdlearn", deadline=None, max_examples=60)
settings.load_profile("pbdlearn")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
