#!/usr/bin/env python3
"""
Tests for the floorplan command line.
"""
import sys
import os
import io
import json
import math
import tempfile
from contextlib import redirect_stdout

# Add the repository root to the Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from floorplanner import config as config_module
from floorplanner.formats import parse_result
from floorplanner.main import (EXIT_ERROR, EXIT_MISMATCH, EXIT_NOT_CONVERGED,
                               EXIT_OK, build_parser, config_from_args)
from floorplanner.main import main as cli_main

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "instances")

PAIR = """
name pair
die 10 10
module a 2 2
module b 2 2
io p fixed 4 5
io q fixed 6 5.5
pin pa a 1 1
pin pb b 1 1
pin pp p
pin pq q
net left pp pa
net link pa pb
net right pb pq
"""

LOOSE = """
die 10 10
module a 2 2
module b 2 2
"""

SHARP = ["--lambda-init", "1", "--lambda-min", "0.01", "--eps-pref", "0.01"]


def run(argv):
    """Run the CLI quietly and return (exit code, captured stdout)."""
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = cli_main(argv)
    return code, buffer.getvalue()


def write(directory, name, text):
    path = os.path.join(directory, name)
    with open(path, "w") as f:
        f.write(text)
    return path


def test_solve_then_check():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "pair.fp", PAIR)
        out = os.path.join(tmp, "pair.json")
        code, _ = run(["solve", instance, *SHARP, "--out", out])
        assert code == EXIT_OK
        result = parse_result(open(out).read())
        assert result.feasible and result.instance_name == "pair"
        assert set(result.timings) == {"initialization", "global", "post"}

        code, _ = run(["check", instance, out])
        assert code == EXIT_OK


def test_check_detects_tampering():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "pair.fp", PAIR)
        out = os.path.join(tmp, "pair.json")
        assert run(["solve", instance, *SHARP, "--out", out])[0] == EXIT_OK

        data = json.loads(open(out).read())
        data["hpwl"] += 1.0
        tampered = write(tmp, "tampered.json", json.dumps(data))
        assert run(["check", instance, tampered])[0] == EXIT_MISMATCH

        data["hpwl"] -= 1.0
        data["placement"] = data["placement"][:-2]
        short = write(tmp, "short.json", json.dumps(data))
        assert run(["check", instance, short])[0] == EXIT_MISMATCH


def test_input_errors_exit_with_one():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "pair.fp", PAIR)
        broken = write(tmp, "broken.fp", "die 10\n")
        assert run(["check", instance, os.path.join(tmp, "missing.json")])[0] == EXIT_ERROR
        assert run(["solve", os.path.join(tmp, "missing.fp")])[0] == EXIT_ERROR
        assert run(["solve", broken])[0] == EXIT_ERROR
        not_json = write(tmp, "bad.json", "{")
        assert run(["check", instance, not_json])[0] == EXIT_ERROR


def test_usage_errors_exit_with_one():
    assert run(["solve", "x.fp", "--bogus"])[0] == EXIT_ERROR
    assert run(["solve", "x.fp", "--T", "0"])[0] == EXIT_ERROR
    assert run(["solve", "x.fp", "--mode", "fast"])[0] == EXIT_ERROR
    assert run([])[0] == EXIT_ERROR


def test_iteration_cap_exits_with_two():
    code, _ = run(["solve", os.path.join(DATA, "tiling9.fp"), "--max-iter", "1",
                   "--post-max-iter", "0", "--no-timings"])
    assert code == EXIT_NOT_CONVERGED


def test_init_centers_unconnected_modules():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "loose.fp", LOOSE)
        out = os.path.join(tmp, "init.json")
        assert run(["init", instance, "--out", out])[0] == EXIT_OK
        result = parse_result(open(out).read())
        assert result.placement.tolist() == [4.0, 4.0, 4.0, 4.0]
        assert result.iterations == 0 and not result.feasible
        assert result.anchored_components == 2 and result.pcg_converged
        data = json.loads(open(out).read())
        assert (data["anchored_components"], data["pcg_converged"]) == (2, True)


def test_compare_prints_one_row_per_method():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "pair.fp", PAIR)
        code, output = run(["compare", instance, *SHARP])
    assert code == EXIT_OK
    rows = [line.split() for line in output.splitlines()]
    rows = [row for row in rows if len(row) == 4 and row[0] in ("MAP", "RMAP")]
    assert [row[0] for row in rows] == ["MAP", "RMAP"]
    assert all(int(row[2]) >= 1 for row in rows)
    assert float(rows[1][3]) < 0.1


def test_render_writes_svg():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "loose.fp", LOOSE)
        out = os.path.join(tmp, "init.json")
        svg = os.path.join(tmp, "init.svg")
        assert run(["init", instance, "--out", out])[0] == EXIT_OK
        assert run(["render", instance, out, "--out", svg])[0] == EXIT_OK
        assert open(svg).read().startswith("<svg")


def test_no_timings_gives_identical_files():
    with tempfile.TemporaryDirectory() as tmp:
        instance = write(tmp, "pair.fp", PAIR)
        first, second = os.path.join(tmp, "a.json"), os.path.join(tmp, "b.json")
        for out in (first, second):
            assert run(["solve", instance, *SHARP, "--seed", "3", "--no-timings",
                        "--out", out])[0] == EXIT_OK
        text = open(first).read()
        assert text == open(second).read()
        assert "timings" not in json.loads(text)
        assert "sweep_seconds" not in text


def test_config_from_args_routes_flags():
    args = build_parser().parse_args(["solve", "x.fp", "--mode", "io", "--T", "inf",
                                      "--Lambda", "0.5", "--Gamma", "1.2", "--seed", "4",
                                      "--max-iter", "7"])
    config = config_from_args(args)
    assert config.mode == "io" and config.io_assignment
    assert config.rmap.threshold == math.inf
    assert config.sm.lambda_decay == 0.5
    assert config.gamma_growth == 1.2
    assert config.seed == 4
    assert config.max_iter == 7
    assert config.sm.lambda_init is None
    assert config.sm.lambda_init_scale == 0.0488
    assert config.rmap.eps_pref is None


def test_malformed_environment_exits_with_one():
    config_module.ENV_ERRORS.append("FLOORPLAN_MAX_ITER='lots' could not be parsed, using 10000")
    try:
        assert run(["solve", os.path.join(DATA, "tiling4.fp")])[0] == EXIT_ERROR
    finally:
        config_module.ENV_ERRORS.clear()


def main():
    """Run all tests."""
    print("=" * 60)
    print("Command Line Tests")
    print("=" * 60)

    tests = [
        test_solve_then_check,
        test_check_detects_tampering,
        test_input_errors_exit_with_one,
        test_usage_errors_exit_with_one,
        test_iteration_cap_exits_with_two,
        test_init_centers_unconnected_modules,
        test_compare_prints_one_row_per_method,
        test_render_writes_svg,
        test_no_timings_gives_identical_files,
        test_config_from_args_routes_flags,
        test_malformed_environment_exits_with_one,
    ]
    failed = 0
    for test in tests:
        try:
            test()
            print(f"✓ {test.__name__}")
        except AssertionError as e:
            failed += 1
            print(f"✗ {test.__name__}: {e}")

    print("=" * 60)
    print(f"{'✓ All tests passed!' if not failed else f'✗ {failed} test(s) failed'}")
    print("=" * 60)
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
