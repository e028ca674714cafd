import os

# Keep the optimal-transport package from probing deep-learning backends.
for _key in ("PYTORCH", "JAX", "TENSORFLOW", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_key}", "1")

_CRITERIA = {}


def record_criterion(number, ok, detail):
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    _CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
