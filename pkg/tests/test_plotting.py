import numpy as np

from tikhonov.plotting import plot_run, plot_sweep

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_plot_run_writes_png(tmp_path):
    t = np.linspace(0, 1, 20)
    col = t[:, None]
    path = plot_run(tmp_path / "run.png", t, np.hstack([col, col]), col, np.hstack([col, col]), col, col,
                    t * 0 + 1e-3, t, np.zeros_like(t), ["n", "p"], ["n2"], title="demo")
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_plot_sweep_writes_png_without_orders(tmp_path):
    path = plot_sweep(tmp_path / "sweep.png", [0.1, 0.05], {"sup_u_after": [0.2, 0.1]}, {"sup_u_after": None})
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_import_leaves_pyplot_untouched():
    import sys

    assert "matplotlib.pyplot" not in sys.modules
