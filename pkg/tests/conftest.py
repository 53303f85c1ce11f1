import numpy as np
import pytest


def write_fixture(root, rows, fs=100.0, seconds=3.0):
    """Tiny dataset dir: ``rows`` is a list of (record_id, glucose)."""
    sig = root / "signals"
    sig.mkdir(parents=True, exist_ok=True)
    lines = ["record_id,subject_id,glucose_mgdl,fs_hz"]
    t = np.arange(int(fs * seconds)) / fs
    for i, (rid, glu) in enumerate(rows):
        lines.append(f"{rid},subj{i},{glu},{fs:g}")
        x = np.sin(2 * np.pi * (1.0 + 0.2 * i) * t) + 0.3 * np.sin(2 * np.pi * 3.1 * t)
        (sig / f"{rid}.csv").write_text("".join(f"{v:.8f}\n" for v in x), encoding="ascii")
    (root / "labels.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


@pytest.fixture
def fixture_dir(tmp_path):
    return write_fixture(tmp_path / "ds", [("rec1", 95.0), ("rec2", 142.5)])
