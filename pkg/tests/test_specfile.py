from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from markov_recurrence import ParseError, load_bundled, parse_chain_spec
from markov_recurrence.specfile import bundled_names, parse_chain_text

EXM_TEXT = """\
name: exM
states: [s0, s1, s2]
matrix:
  - [0, 0, 1]
  - [1/2, 1/2, 0]
  - [0, 0, 1]
"""


def test_bundled_examples_present():
    assert {"ex0", "exM", "ex1", "ex2", "ex5", "ex6", "diag", "identity", "gen2"} <= set(bundled_names())


def test_exm_round_trip(tmp_path):
    p = tmp_path / "exM.yaml"
    p.write_text(EXM_TEXT)
    spec = parse_chain_spec(p)
    assert spec.kind == "matrix" and spec.n == 3 and spec.name == "exM"
    assert spec.space.labels == ("s0", "s1", "s2")
    assert np.array_equal(spec.kernel.probs, [[0, 0, 1], [.5, .5, 0], [0, 0, 1]])
    assert spec.exact_matrix[1] == (Fraction(1, 2), Fraction(1, 2), Fraction(0))
    assert np.allclose(spec.measure.weights, 1 / 3)
    assert spec.path == str(p)


def test_thirds_are_exact():
    spec = parse_chain_text("states: 3\nmatrix:\n  - [1/3, 1/3, 1/3]\n  - [0, 1, 0]\n  - [0, 0, 1]\n")
    assert spec.exact_matrix[0] == (Fraction(1, 3),) * 3
    assert sum(spec.exact_matrix[0]) == 1
    assert spec.kernel.probs[0, 0] == 1 / 3


def test_malformed_row_reports_field_and_line():
    text = "states: 2\nmatrix:\n  - [0.5, 0.5]\n  - [0.5, 0.4]\n"
    with pytest.raises(ParseError) as info:
        parse_chain_text(text)
    assert info.value.field == "matrix[1]"
    assert info.value.line == 4


def test_short_row_reports_line():
    text = "states: 2\nmatrix:\n  - [1]\n  - [0.5, 0.5]\n"
    with pytest.raises(ParseError) as info:
        parse_chain_text(text)
    assert info.value.field == "matrix[0]" and info.value.line == 3


@pytest.mark.parametrize("text,fld", [
    ("states: 2\nmatrix: [[1, 0], [0, 1]]\ncolour: red\n", "colour"),
    ("states: 2\nmatrix: [[1, 0], [0, 1]]\ngamma: 1\n", "gamma"),
    ("states: 2\ngenerator: [[-1, 1], [1, -1]]\n", "gamma"),
    ("states: 2\nmatrix: [[1, 0], [0, 1]]\nmeasure: [1]\n", "measure"),
    ("states: 2\nmatrix: [[1, 0], [0, x]]\n", "matrix"),
    ("states: 2\nmap: [0, s5]\n", "map"),
    ("states: 2\nmatrix: [[1, 0], [0, 1]]\noverrides: [[0, 1]]\n", "overrides"),
])
def test_field_errors(text, fld):
    with pytest.raises(ParseError) as info:
        parse_chain_text(text)
    assert info.value.field is not None and info.value.field.startswith(fld)
    assert info.value.line is not None


def test_dynamics_key_required_once():
    with pytest.raises(ParseError):
        parse_chain_text("states: 2\n")
    with pytest.raises(ParseError):
        parse_chain_text("states: 2\nmatrix: [[1, 0], [0, 1]]\nmap: [0, 1]\n")


def test_invalid_yaml_and_missing_file(tmp_path):
    with pytest.raises(ParseError) as info:
        parse_chain_text("states: [1, 2\n")
    assert info.value.line is not None
    with pytest.raises(ParseError):
        parse_chain_spec(tmp_path / "missing.yaml")
    with pytest.raises(ParseError):
        parse_chain_text("")


def test_map_with_labels():
    spec = parse_chain_text("states: [a, b, c]\nmap: [b, c, 2]\n")
    assert np.array_equal(spec.kernel.probs, [[0, 1, 0], [0, 0, 1], [0, 0, 1]])


def test_generator_against_expm():
    spec = load_bundled("gen2")
    assert spec.kind == "generator"
    ref = expm(np.array([[-1.0, 1], [1, -1]]) * spec.gamma)
    assert np.allclose(spec.kernel.probs, ref, atol=1e-12)
    assert spec.kernel.probs[0, 1] == pytest.approx(3 / 8, abs=1e-12)
    other = spec.with_gamma(2.0)
    assert np.allclose(other.kernel.probs, expm(np.array([[-1.0, 1], [1, -1]]) * 2), atol=1e-12)


def test_with_gamma_rejects_matrix_input():
    with pytest.raises(ParseError) as info:
        load_bundled("ex0").with_gamma(1.0)
    assert info.value.field == "gamma"


def test_diag_schedule():
    spec = load_bundled("diag")
    assert spec.kind == "schedule" and spec.kernel is None
    assert spec.schedule.tail_period == 3 and len(spec.schedule.kernels) == 3
    assert spec.schedule.kernel_at(3) is spec.schedule.kernel_at(0)


def test_homogeneous_schedule_keeps_kernel():
    spec = parse_chain_text("states: 2\nschedule:\n  - map: [1, 0]\n")
    assert spec.kernel is not None and spec.schedule.homogeneous


def test_bad_schedule_entry():
    with pytest.raises(ParseError) as info:
        parse_chain_text("states: 2\nschedule:\n  - map: [1, 0]\n  - rates: [1, 0]\n")
    assert info.value.field == "schedule[1]" and info.value.line == 4


def test_ex6_parse():
    spec = load_bundled("ex6")
    t = spec.piecewise
    assert spec.kind == "map_pieces" and spec.refine == (10, 100, 1000)
    assert t(0) == Fraction(4, 5) and t(1) == Fraction(1, 5)
    assert t(Fraction(1, 2)) == Fraction(3, 4) and t(Fraction(1, 4)) == Fraction(1, 16)


def test_map_pieces_errors():
    text = 'map_pieces:\n  - domain: "[0, 1/2)"\n    formula: square\n'
    with pytest.raises(ParseError) as info:
        parse_chain_text(text)
    assert info.value.field == "map_pieces"
    text = 'map_pieces:\n  - domain: "[0, 1]"\n    formula: cube\n'
    with pytest.raises(ParseError):
        parse_chain_text(text)
    text = 'map_pieces:\n  - domain: "[0, 1]"\n    formula: square\nrefine: [100, 10]\n'
    with pytest.raises(ParseError) as info:
        parse_chain_text(text)
    assert info.value.field == "refine"


def test_compose_formula():
    text = 'map_pieces:\n  - domain: "[0, 1]"\n    formula: {compose: [square, {reflect: square}]}\n'
    t = parse_chain_text(text).piecewise
    x = Fraction(1, 3)
    assert t(x) == (1 - (1 - x) ** 2) ** 2


def test_measure_and_cells():
    text = "states: 2\nmatrix: [[1, 0], [0, 1]]\nmeasure: [1/4, 3/4]\ncells: [[0, 1/2], [1/2, 1]]\n"
    spec = parse_chain_text(text)
    assert spec.measure.weights[1] == pytest.approx(0.75)
    assert spec.space.cell_bounds[1] == (Fraction(1, 2), Fraction(1))
