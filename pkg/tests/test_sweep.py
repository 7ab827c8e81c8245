import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from sqzamp import ConfigError, __version__
from sqzamp.sweep import (
    AXIS_NAMES,
    OUTPUTS,
    PRESETS,
    REALISTIC,
    Axis,
    SweepSpec,
    evaluate_point,
    format_float,
    merge_point,
    run_figure,
    run_sweep,
    sweep_csv,
    validate_point,
)

GOLDEN = Path(__file__).parent / "golden"


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def preset_rows(preset_id, *overrides):
    header, rows = table(sweep_csv(PRESETS[preset_id].spec(overrides)))
    return header, np.array(rows)


def test_format_float():
    assert format_float(0.1) == "0.1"
    assert format_float(1 / 3) == "0.333333333"
    assert format_float(-8.395142813548) == "-8.39514281"
    assert format_float(1e-20) == "1e-20"
    assert [format_float(v) for v in (math.inf, -math.inf, math.nan)] == ["inf", "-inf", "nan"]


def test_axis_grid_and_parse():
    assert list(Axis("l_det", 0, 1, 3).grid()) == [0.0, 0.5, 1.0]
    np.testing.assert_allclose(Axis("g_opa", 1, 100, 3, "log").grid(), [1, 10, 100])
    assert Axis.parse("g_opa=1,2, 5") == Axis("g_opa", values=(1.0, 2.0, 5.0))
    assert Axis.parse("theta_opo:0:0.1:11:linear") == Axis("theta_opo", 0.0, 0.1, 11)
    assert Axis.parse("eta_det:0.5:1:2").describe() == {
        "name": "eta_det", "start": 0.5, "stop": 1.0, "count": 2, "scale": "linear"
    }


@pytest.mark.parametrize(
    "make",
    [
        lambda: Axis("bogus", 0, 1, 3),
        lambda: Axis("l_det", 0, 1, 1),
        lambda: Axis("l_det", 1, 0, 3),
        lambda: Axis("l_det", 0, 1, 3, "cubic"),
        lambda: Axis("g_opa", 0, 10, 3, "log"),
        lambda: Axis("g_opa", values=()),
        lambda: Axis.parse("l_det:0:1"),
        lambda: Axis.parse("l_det:0:1:x"),
        lambda: SweepSpec(Axis("l_det", 0, 1, 2), Axis("l_det", 0, 1, 2)),
        lambda: SweepSpec(Axis("l_det", 0, 1, 2), Axis("eta_det", 0, 1, 2)),
        lambda: SweepSpec(Axis("l_det", 0, 1, 2), outputs=("nope",)),
    ],
)
def test_spec_validation(make):
    with pytest.raises(ConfigError):
        make()


def test_unknown_axis_lists_closed_set():
    with pytest.raises(ConfigError) as info:
        Axis("gain", 0, 1, 2)
    for name in AXIS_NAMES:
        assert name in str(info.value)


def test_point_validation():
    assert validate_point({"g_opo": 2, "l_det": 0.25})["eta_det"] == 0.75
    for point, field in [
        ({"g_opo": 2, "eta_det": 1.2}, "eta_det"),
        ({"g_opo": 0.5}, "g_opo"),
        ({}, "g_opo"),
        ({"g_opo": 2, "g_opa": 0.9}, "g_opa"),
        ({"g_opo": 2, "theta_opa": 0.1}, "theta_opa"),
        ({"g_opo": 2, "p_sig": 0}, "p_sig"),
        ({"g_opo": 2, "phase_noise_mode": "wild"}, "phase_noise_mode"),
        ({"g_opo": 2, "gopa": 3}, "gopa"),
        ({"g_opo": 2, "eta_det": 0.5, "l_det": 0.3}, "l_det"),
        ({"g_opo": "two"}, "g_opo"),
    ]:
        with pytest.raises(ConfigError) as info:
            validate_point(point)
        assert info.value.field == field


def test_merge_point_detection_synonyms():
    assert merge_point({"eta_det": 0.7}, {"l_det": 0.1}) == {"l_det": 0.1}
    assert merge_point({"l_det": 0.1}, {"eta_det": 0.5, "g_opa": None}) == {"eta_det": 0.5}
    with pytest.raises(ConfigError):
        merge_point({}, {"bogus": 1})


def test_evaluate_point_conventional_and_amplified():
    conv = evaluate_point({**REALISTIC, "g_opo": 1.8})
    assert conv["snr_conv_db"] == pytest.approx(1.99938271564475, abs=1e-11)
    assert math.isnan(conv["epsilon"])
    amp = evaluate_point({**REALISTIC, "g_opo": 1.8, "g_opa": 2.4})
    assert round(amp["snr_amp_db"], 1) == 3.8
    assert set(amp) == set(OUTPUTS)


def test_evaluate_point_shortcuts_match_full_report():
    point = {**REALISTIC, "g_opo": 5.2, "g_opa": 7.0, "theta_opa": 0.02}
    full = evaluate_point(point)
    for name in ("eta_eff", "v_eff_db", "epsilon_db", "epsilon"):
        assert evaluate_point(point, (name,))[name] == pytest.approx(full[name], rel=1e-14)


def test_infinite_gain_is_analytic():
    out = evaluate_point({**REALISTIC, "g_opo": 5.2, "g_opa": math.inf})
    assert out["eta_eff"] == 0.98
    assert out["v_eff_db"] == pytest.approx(-9.05891651105015, abs=1e-11)
    assert math.isnan(out["epsilon"])
    with pytest.raises(ConfigError):
        evaluate_point({**REALISTIC, "g_opo": 5.2, "g_opa": math.inf, "theta_opo": 0.01})


@pytest.mark.parametrize("preset_id", sorted(PRESETS))
def test_preset_audit(preset_id):
    preset = PRESETS[preset_id]
    for key, value in REALISTIC.items():
        assert preset.fixed[key] == value
    assert preset.fixed["g_opo"] == 5.2
    names = {preset.axis1.name, preset.axis2.name}
    # one phase-noise source at a time
    assert not {"theta_opo", "theta_opa"} <= names | set(k for k, v in preset.fixed.items() if k.startswith("theta"))
    assert (GOLDEN / f"{preset_id}.header").read_text() == ",".join(
        [preset.axis1.name, preset.axis2.name, *preset.outputs]
    ) + "\n"


def test_preset_gains():
    assert [PRESETS[p].fixed["g_opa"] for p in ("fig4a", "fig4b", "fig4c")] == [1.0, 10.0, math.inf]
    assert [PRESETS[p].fixed["g_opa"] for p in ("fig5a", "fig5b", "fig5c")] == [1.0, 5.2, 5.2]
    assert PRESETS["fig3"].axis2.values == PRESETS["fig6"].axis2.values == (1.0, 2.0, 5.0, 10.0, 50.0)


@pytest.mark.parametrize("preset_id", sorted(PRESETS))
def test_preset_header_golden(preset_id):
    small = [Axis(a.name, values=a.grid()[:2]) for a in (PRESETS[preset_id].axis1, PRESETS[preset_id].axis2)]
    text = sweep_csv(PRESETS[preset_id].spec(small))
    assert text.splitlines(keepends=True)[0] == (GOLDEN / f"{preset_id}.header").read_text()
    assert len(text.splitlines()) == 5


def test_small_sweep_matches_golden():
    spec = SweepSpec(
        Axis("l_det", values=(0, 0.3, 0.6, 0.9)),
        Axis("g_opa", values=(2, 10)),
        {**REALISTIC, "g_opo": 5.2},
        ("v_eff_db", "eta_eff", "epsilon_db"),
    )
    got_header, got = table(sweep_csv(spec))
    ref_header, ref = table((GOLDEN / "sweep_small.csv").read_text())
    assert got_header == ref_header
    np.testing.assert_allclose(got, ref, rtol=1e-8, atol=1e-9)


def test_fig3_recovery_row():
    header, rows = preset_rows("fig3")
    assert header == ["l_det", "g_opa", "v_eff_db"]
    row = rows[(np.abs(rows[:, 0] - 0.3) < 1e-12) & (rows[:, 1] == 10.0)]
    assert row[0, 2] == pytest.approx(-8.40, abs=0.01)
    # axis-major: the first axis changes slowest
    assert list(rows[:5, 0]) == [0.0] * 5 and list(rows[:5, 1]) == [1, 2, 5, 10, 50]


def test_fig4a_null_line():
    _, rows = preset_rows("fig4a")
    null = rows[np.abs(rows[:, 0] - 0.5) < 1e-12]
    assert len(null) == 101
    np.testing.assert_allclose(null[:, 2], 0.0, atol=1e-15)


def test_fig4b_null_position():
    _, rows = preset_rows("fig4b")
    top = rows[rows[:, 1] == 1.0]
    assert top[np.argmin(top[:, 2]), 0] == pytest.approx(0.16)
    assert top[np.argmin(top[:, 2]), 2] < 1e-4
    _, fine = preset_rows("fig4b", Axis("eta_opa", 0.15, 0.17, 2001), Axis("eta_det", values=(1.0,)))
    assert fine[np.argmin(fine[:, 2]), 0] == pytest.approx(0.158113883, abs=1e-5)


def test_fig4c_is_escape_efficiency():
    _, rows = preset_rows("fig4c")
    np.testing.assert_array_equal(rows[:, 2], rows[:, 0])


@pytest.mark.slow
def test_fig5c_contours_nearly_flat():
    _, rows = preset_rows("fig5c", Axis("l_det", 0.0, 0.3, 31))
    grid = rows[:, 2].reshape(31, 101)
    assert np.ptp(grid, axis=1).max() < 0.3


def test_fig6_boost_row():
    _, rows = preset_rows("fig6")
    row = rows[(np.abs(rows[:, 0] - 0.3) < 1e-12) & (rows[:, 1] == 10.0)]
    assert row[0, 2] == pytest.approx(5.4, abs=0.05)


def test_degenerate_counts():
    fixed = {**REALISTIC, "g_opo": 5.2, "g_opa": 2.0}
    assert len(sweep_csv(SweepSpec(Axis("l_det", 0, 1, 2), fixed=fixed)).splitlines()) == 3
    assert len(sweep_csv(SweepSpec(Axis("l_det", 0, 1, 2), Axis("eta_opa", 0.5, 1, 2), fixed)).splitlines()) == 5


def test_default_outputs():
    assert SweepSpec(Axis("l_det", 0, 1, 2)).outputs[-1] == "snr_conv_db"
    assert SweepSpec(Axis("g_opa", 1, 2, 2)).outputs[-1] == "epsilon_db"


def test_csv_format(tmp_path):
    spec = SweepSpec(Axis("l_det", 0, 1, 3), fixed={**REALISTIC, "g_opo": 5.2, "g_opa": 10.0}, outputs=("v_eff_db",))
    path = tmp_path / "s.csv"
    text = run_sweep(spec, path)
    raw = path.read_bytes()
    assert raw == text.encode("utf-8")
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert run_sweep(spec) == text


def test_figure_files_reproducible(tmp_path):
    small = (Axis("l_det", 0, 0.3, 4),)
    a = run_figure("fig6", tmp_path / "a", small)
    b = run_figure("fig6", tmp_path / "b", small)
    for pa, pb in zip(a, b):
        assert Path(pa).read_bytes() == Path(pb).read_bytes()
    meta = json.loads(Path(a[1]).read_text())
    assert meta["preset"] == "fig6"
    assert meta["code_version"] == __version__
    assert meta["schema_version"] == "1"
    assert meta["fixed"] == {**REALISTIC, "g_opo": 5.2}
    assert meta["axes"][0] == {"name": "l_det", "start": 0.0, "stop": 0.3, "count": 4, "scale": "linear"}
    assert meta["files"] == ["fig6.csv"]


def test_fig4c_metadata_spells_infinity(tmp_path):
    _, meta = run_figure("fig4c", tmp_path, (Axis("eta_opa", 0, 1, 2), Axis("eta_det", 0, 1, 2)))
    assert json.loads(Path(meta).read_text())["fixed"]["g_opa"] == "inf"


def test_figure_errors(tmp_path):
    with pytest.raises(ConfigError):
        run_figure("fig9", tmp_path)
    with pytest.raises(ConfigError):
        run_figure("fig6", tmp_path, (Axis("theta_opa", 0, 1, 2),))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_figure("fig6", blocker / "sub", (Axis("l_det", 0, 1, 2),))
