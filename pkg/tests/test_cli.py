import pytest

from germfib import cli
from germfib.cli import EXIT_CAPACITY, EXIT_DOMAIN, EXIT_OK, EXIT_PARSE, CommandConfig, main, run
from germfib.errors import DomainError
from germfib.series import format_cocycle, parse_cocycle

EX1 = "k 1\norder 5\na 3 5 1\n"
EX2 = "k 1\norder 5\nb 2 5 1\nb 4 5 1\n"


def test_detect_example_one():
    code, out = run(CommandConfig("detect", order=5, output="machine"), [EX1])
    assert code == EXIT_OK and "verdict = no-fibration-up-to-order-N" in out


def test_detect_slice_mode():
    code, out = run(CommandConfig("detect", theta="slice1", output="machine"), [EX2])
    assert code == EXIT_OK and "verdict = unique" in out
    assert "w1 = alpha=0 beta=0 gamma=0 theta=1" in out


def test_detect_several_files_in_parallel(tmp_path):
    paths = []
    for name, text in (("one.cocycle", EX1), ("two.cocycle", EX2)):
        p = tmp_path / name
        p.write_text(text)
        paths.append(str(p))
    serial = run(CommandConfig("detect", inputs=paths, output="machine"))
    parallel = run(CommandConfig("detect", inputs=paths, output="machine", parallel=2))
    assert serial == parallel and serial[0] == EXIT_OK
    assert serial[1].count("# file ") == 2


def test_machine_output_is_deterministic():
    a = run(CommandConfig("detect", output="machine"), [EX2])
    assert a == run(CommandConfig("detect", output="machine"), [EX2])


def test_act_command():
    code, out = run(CommandConfig("act", param="1,2,3,1"), ["k 1\norder 4\n"])
    assert code == EXIT_OK
    assert parse_cocycle(out).a(3, 4) == -1


def test_act_rejects_non_normal_input():
    code, out = run(CommandConfig("act", param="0,0,0,1"), ["k 1\norder 4\na 0 1 1\n"])
    assert code == EXIT_DOMAIN and "normal form" in out
    code, _ = run(CommandConfig("act", param="1,2,3"), ["k 1\norder 4\n"])
    assert code == EXIT_PARSE
    code, _ = run(CommandConfig("act", param="1,2,3,0"), ["k 1\norder 4\n"])
    assert code == EXIT_DOMAIN


def test_normalize_command():
    code, out = run(CommandConfig("normalize"), ["k 1\norder 3\na 2 1 1\n"])
    assert code == EXIT_OK
    assert "chart0 a 0 1 1" in out and "# eliminated" in out
    code, lean = run(CommandConfig("normalize", output="machine"), ["k 1\norder 3\na 2 1 1\n"])
    assert "# eliminated" not in lean


def test_cover_command():
    code, out = run(CommandConfig("cover", order=4), ["k 2\norder 4\n"])
    assert code == EXIT_OK and parse_cocycle(out).self_intersection == 1


def test_parse_errors_exit_two():
    assert run(CommandConfig("detect"), [""])[0] == EXIT_PARSE
    code, out = run(CommandConfig("detect"), ["k 1\norder 4\na 3 4 (\n"])
    assert code == EXIT_PARSE and "line 3" in out


def test_capacity_exit_code():
    text = "k 1\norder 7\n" + "".join(f"b {k} {n} {k + n}\n" for n in range(3, 8) for k in range(2, n))
    code, out = run(CommandConfig("detect", step_limit=1), [text])
    assert code == EXIT_CAPACITY and "capacity" in out


def test_missing_file_is_domain_error(tmp_path):
    assert run(CommandConfig("detect", inputs=[str(tmp_path / "nope")]))[0] == EXIT_DOMAIN


def test_config_validation():
    with pytest.raises(DomainError):
        CommandConfig("frobnicate")
    with pytest.raises(DomainError):
        CommandConfig("detect", order=0)


def test_models_round_trip(tmp_path):
    code, out = run(CommandConfig("models", order=5, out_dir=str(tmp_path)))
    assert code == EXIT_OK and out.count("wrote") == 3
    line = (tmp_path / "p2_line.cocycle").read_text()
    assert "positive-dimensional-family" in run(CommandConfig("detect", output="machine"), [line])[1]
    cover = (tmp_path / "double_cover_diagonal.cocycle").read_text()
    assert "all-of-C" in run(CommandConfig("detect", output="machine"), [cover])[1]
    diagonal = (tmp_path / "diagonal.cocycle").read_text()
    code, out = run(CommandConfig("detect", output="machine"), [diagonal])
    assert code == EXIT_OK and "all-of-C" in out


def test_main_entry_point(tmp_path, capsys):
    p = tmp_path / "ex1.cocycle"
    p.write_text(EX1)
    assert main(["detect", str(p), "--format", "machine"]) == EXIT_OK
    assert "[classification]" in capsys.readouterr().out
    assert main(["detect", str(p), "--order", "0"]) == EXIT_DOMAIN
    with pytest.raises(SystemExit):
        main(["detect"])


def test_verify_command(capsys):
    assert main(["verify-paper"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.rstrip().endswith("all checks passed")
    assert "FAIL" not in out


def test_normalize_output_parses_back():
    code, out = run(CommandConfig("normalize", output="machine"), ["k 1\norder 3\na 2 1 1\nb 0 2 3\n"])
    body = "\n".join(l for l in out.splitlines() if not l.startswith(("chart", "#")))
    assert parse_cocycle(body).order == 3
    assert cli.format_cocycle is format_cocycle
