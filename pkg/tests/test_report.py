from relaxtag.evaluate import build_report
from relaxtag.report import render_curves, write_sweep_report

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_render_curves_writes_png(tmp_path):
    out = tmp_path / "curves.png"
    path = render_curves({"SsApViFsB": [60.0, 70.0, 75.0]}, str(out))
    assert path == str(out)
    assert out.read_bytes()[:8] == PNG_MAGIC


def test_write_sweep_report_all_artifacts(tmp_path):
    series = {"SsApViFsB": [60.0, 70.0], "SsAcViFsBT": [55.0, 65.0]}
    reports = [build_report(name, vals, vals[-1])
               for name, vals in series.items()]
    paths = write_sweep_report(reports, series, str(tmp_path / "out"))
    table = open(paths["table"], encoding="utf-8").read()
    tsv = open(paths["tsv"], encoding="utf-8").read()
    assert table.splitlines()[0].startswith("algorithm")
    assert tsv.splitlines()[1].startswith("SsApViFsB\t")
    with open(paths["figure"], "rb") as fh:
        assert fh.read(8) == PNG_MAGIC
