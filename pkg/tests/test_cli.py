import json

import numpy as np
import pytest

from grf_shape.grf_shape_cli import main, build_parser, sampler_config, learning_schedule, EXIT_NOT_EQUAL, EXIT_VALIDATION, EXIT_RUNTIME
from grf_shape.utility import file_io
from grf_shape.settings import settings

from conftest import make_random_model


def test_parser_defaults():
    args = build_parser().parse_args(["gen", "blobs", "--seed", "4", "--chains", "3"])
    assert args.command == "gen" and args.variant == "blobs"
    settings["burn_in"] = 7
    config = sampler_config(args)
    assert config.seed == 4
    assert config.n_chains == 3
    assert config.burn_in == 7
    schedule = learning_schedule(build_parser().parse_args(["learn", "m.json", "--iters", "12", "--step0", "0.2"]))
    assert schedule.iterations == 12
    assert schedule.step0 == 0.2


def test_gen_blobs(tmp_path):
    out = str(tmp_path / "blobs.json")
    assert main(["gen", "blobs", "--width", "16", "--height", "12", "-o", out]) == 0
    model = file_io.read_model(out).model
    assert model.domain.shape == (12, 16)
    assert np.allclose(model.potentials.table((5, 0)), [[0.15, 0.35], [0.35, -0.85]])


def test_default_output_name(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"datadir": str(tmp_path / "data"), "name": "run"}))
    assert main(["gen", "potts", "--width", "4", "--height", "4", "-c", str(config)]) == 0
    assert main(["gen", "potts", "--width", "4", "--height", "4", "-c", str(config)]) == 0
    assert sorted(p.name for p in (tmp_path / "data").iterdir()) == ["run000.json", "run001.json"]


def test_gen_figure_and_loss(tmp_path, capsys):
    image, truth = str(tmp_path / "figure.pgm"), str(tmp_path / "truth.pgm")
    assert main(["gen", "figure", "--noise", "0", "--truth", truth, "-o", image]) == 0
    assert file_io.read_image(image).shape == (64, 64, 1)
    assert main(["loss", truth, truth]) == 0
    assert "hamming = 0" in capsys.readouterr().out


def test_oracle_equal(tmp_path, capsys):
    m1, m2 = str(tmp_path / "m1.json"), str(tmp_path / "m2.json")
    file_io.write_model(m1, make_random_model(0))
    file_io.write_model(m2, make_random_model(1))
    assert main(["oracle", "equal", m1, m1]) == 0
    assert main(["oracle", "equal", m1, m2]) == EXIT_NOT_EQUAL
    assert capsys.readouterr().out.split() == ["equal", "not", "equal"]


def test_oracle_z(tmp_path, capsys):
    p = str(tmp_path / "m.json")
    file_io.write_model(p, make_random_model(0, 2, 2))
    assert main(["oracle", "z", p]) == 0
    assert "log Z" in capsys.readouterr().out
    assert main(["oracle", "rank", p]) == 0
    assert "identifiable" in capsys.readouterr().out


def test_stats_count_and_learn(tmp_path):
    model, labelling, stats, learned = (str(tmp_path / name) for name in ("m.json", "y.pgm", "s.json", "l.json"))
    file_io.write_model(model, make_random_model(0))
    file_io.write_labelling(labelling, np.array([[0, 0, 0], [1, 1, 1], [0, 0, 0]]))
    assert main(["stats", "count", model, labelling, "-o", stats]) == 0
    counts, provenance = file_io.read_statistics(stats)
    assert counts.kind == "counts"
    assert "seed" in provenance
    trace = str(tmp_path / "trace.csv")
    assert main(["learn", model, "--labelling", labelling, "--iters", "3", "--burn-in", "2", "--trace", trace, "-o", learned]) == 0
    assert file_io.read_model(learned).provenance["schedule"]["iterations"] == 3
    # raw counts are rejected as learning target
    assert main(["learn", model, "--target", stats, "--iters", "3", "-o", learned]) == EXIT_VALIDATION


def test_exit_codes(tmp_path):
    assert main(["oracle", "z", str(tmp_path / "missing.json")]) == EXIT_RUNTIME
    assert main(["gen", "potts", "--anisotropic", "--strengths", "1", "2", "-o", str(tmp_path / "p.json")]) == EXIT_VALIDATION
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["oracle", "z", str(bad)]) == EXIT_VALIDATION


def test_usage_error():
    with pytest.raises(SystemExit):
        main(["structure", "grow"])


def test_blobs_help_names_the_offset_reading(capsys):
    with pytest.raises(SystemExit):
        main(["gen", "blobs", "-h"])
    text = " ".join(capsys.readouterr().out.split())
    assert "presumed typo for (1,0),(0,1)" in text


def test_learn_trace_plot(tmp_path):
    model, labelling, learned = (str(tmp_path / name) for name in ("m.json", "y.pgm", "l.json"))
    trace, figure = str(tmp_path / "trace.csv"), str(tmp_path / "trace.png")
    file_io.write_model(model, make_random_model(0))
    file_io.write_labelling(labelling, np.array([[0, 0, 0], [1, 1, 1], [0, 0, 0]]))
    assert main(["learn", model, "--labelling", labelling, "--iters", "3", "--burn-in", "2", "--trace", trace, "--plot", figure, "-o", learned]) == 0
    assert (tmp_path / "trace.png").stat().st_size > 0
    replot = str(tmp_path / "again.png")
    assert main(["plot", trace, "-o", replot]) == 0
    assert (tmp_path / "again.png").is_file()
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    assert main(["plot", str(tmp_path / "bad.csv")]) == EXIT_VALIDATION


def test_structure_repeat_histogram(tmp_path, capsys):
    labelling = str(tmp_path / "y.pgm")
    file_io.write_labelling(labelling, np.repeat(np.array([0, 0, 1, 1, 0, 0])[:, np.newaxis], 6, axis=1))
    histogram, out = str(tmp_path / "hist.png"), str(tmp_path / "s.json")
    argv = ["structure", "grow", "--labelling", labelling, "--labels", "2", "--d", "1", "--target-size", "1",
            "--iters", "4", "--burn-in", "2", "--samples", "5", "--repeat", "2", "--histogram", histogram, "-o", out]
    assert main(argv) == 0
    printed = capsys.readouterr().out
    assert "Structure (seed 0)" in printed and "Structure (seed 1)" in printed
    assert (tmp_path / "hist.png").is_file()
    assert len(file_io.read_model(out).model.structure.nonzero) == 1
    assert main(argv[:-4] + ["--repeat", "0", "-o", out]) == EXIT_VALIDATION
