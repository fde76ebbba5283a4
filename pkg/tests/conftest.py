import numpy as np
import pytest

from svrec.synth import GeneratorSpec
from svrec.video import Clip


@pytest.fixture
def tiny_spec():
    return GeneratorSpec(class_count=3, clips_per_class_per_subject=1, subjects=2, width=64, height=64, fps=8,
                         idle_pad_s=0.5, action_s=2.0)


def moving_square_clip(n=20, size=48, start=6, speed=1, side=10, value=220, fps=16):
    """Bright square on a dark field, still until ``start`` then moving right."""
    frames = np.full((n, size, size), 30, dtype=np.uint8)
    y0 = size // 2 - side // 2
    for t in range(n):
        x0 = 8 + max(0, t - start) * speed
        frames[t, y0 : y0 + side, x0 : x0 + side] = value
    return Clip(frames, fps)


def smooth_texture(h=40, w=40, shift=0.0):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    x = xx - shift
    return 128 + 50 * np.sin(x / 3.0) * np.cos(yy / 4.0) + 30 * np.sin((x + yy) / 5.0)


VERDICTS = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def verdict(request):
    """Record and print one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(VERDICTS, [])

    def record(number, title, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'} {title}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
