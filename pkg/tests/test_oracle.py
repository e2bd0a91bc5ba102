"""Scaled-oracle configuration, parsing, and validation runs.

The two-ball validation here runs at 256^2 so the file stays in the
seconds range; the stock 512^2 geometry is exercised end to end in the
acceptance suite.
"""

import dataclasses
import math

import pytest

from gravfringe.errors import ConfigParseError, ConfigValidationError, DomainError
from gravfringe.oracle import (
    OracleConfig,
    default_scaled_config,
    load_oracle_config,
    parse_oracle_config,
    run_validation,
    save_oracle_config,
    serialize_oracle_config,
    write_report,
)

TWO_BALL_DOC = """
# scaled two-ball validation geometry
potential = two_ball
arm_separation = 8.0
packet_width = 0.25
coupling_left = 705.0
coupling_right = 1410.0
dist_left = 20.0
dist_right = 28.284271247461902
q_lo = -8.5
q_hi = 8.5
p_lo = -40.0
p_hi = 40.0
"""

QUADRATIC_DOC = """
potential = quadratic   # classical and quantum transport must coincide
arm_separation = 8.0
packet_width = 0.25
quad_slope = 0.0375
quad_curvature = 0.02
n_q = 128
n_p = 128
n_snapshots = 7
hold_time = 3.0
q_lo = -8.5
q_hi = 8.5
p_lo = -12.0
p_hi = 12.0
"""


def quadratic_config():
    return parse_oracle_config(QUADRATIC_DOC)


# ----------------------------------------------------------------- parsing


def test_parse_two_ball_document():
    cfg = parse_oracle_config(TWO_BALL_DOC)
    assert cfg.potential == "two_ball"
    assert cfg.coupling_right == 1410.0
    assert cfg.dist_right == pytest.approx(20.0 * math.sqrt(2.0))
    assert cfg.quad_slope is None
    # unset keys take their dataclass defaults
    assert cfg.n_q == 512 and cfg.n_max == 3 and cfg.hbar == 1.0


def test_parse_quadratic_document():
    cfg = quadratic_config()
    assert cfg.potential == "quadratic"
    assert cfg.quad_curvature == 0.02
    assert cfg.coupling_left is None
    assert cfg.n_q == 128 and cfg.n_snapshots == 7


def test_parse_missing_potential():
    doc = TWO_BALL_DOC.replace("potential = two_ball", "")
    with pytest.raises(ConfigParseError, match="potential"):
        parse_oracle_config(doc)


def test_parse_duplicate_potential():
    doc = TWO_BALL_DOC + "potential = quadratic\n"
    with pytest.raises(ConfigParseError, match="duplicate"):
        parse_oracle_config(doc)


def test_parse_unknown_key():
    with pytest.raises(ConfigParseError, match="wobble"):
        parse_oracle_config(TWO_BALL_DOC + "wobble = 3\n")


def test_parse_missing_required_scalar():
    doc = TWO_BALL_DOC.replace("arm_separation = 8.0", "")
    with pytest.raises(ConfigParseError, match="arm_separation"):
        parse_oracle_config(doc)


def test_parse_fractional_grid_size_rejected():
    doc = TWO_BALL_DOC + "n_q = 512.5\n"
    with pytest.raises(ConfigParseError, match="integer"):
        parse_oracle_config(doc)


def test_parse_whole_float_grid_size_coerced():
    cfg = parse_oracle_config(TWO_BALL_DOC + "n_q = 256.0\n")
    assert cfg.n_q == 256 and isinstance(cfg.n_q, int)


def test_unknown_potential_kind_rejected():
    doc = TWO_BALL_DOC.replace("potential = two_ball", "potential = cubic")
    with pytest.raises(ConfigValidationError, match="cubic"):
        parse_oracle_config(doc)


def test_key_for_wrong_kind_rejected():
    with pytest.raises(ConfigValidationError, match="quad_slope"):
        parse_oracle_config(TWO_BALL_DOC + "quad_slope = 0.1\n")


def test_missing_kind_requirement_rejected():
    doc = TWO_BALL_DOC.replace("dist_right = 28.284271247461902", "")
    with pytest.raises(ConfigValidationError, match="dist_right"):
        parse_oracle_config(doc)


def test_span_defaults_fill_in():
    cfg = OracleConfig(
        potential="quadratic",
        arm_separation=8.0,
        packet_width=0.25,
        quad_slope=0.01,
    )
    assert cfg.q_lo == -12.0 and cfg.q_hi == 12.0  # 1.5 separations
    assert cfg.p_lo == -32.0 and cfg.p_hi == 32.0  # 8 hbar / width
    # default grid resolves the fringe with >= 4 samples per oscillation
    dp = (cfg.p_hi - cfg.p_lo) / cfg.n_p
    assert dp <= math.pi * cfg.hbar / (2.0 * cfg.arm_separation)


def test_coarse_momentum_grid_rejected():
    with pytest.raises(ConfigValidationError, match="four samples"):
        OracleConfig(
            potential="quadratic",
            arm_separation=8.0,
            packet_width=0.25,
            quad_slope=0.01,
            n_p=128,
            p_lo=-32.0,
            p_hi=32.0,
        )


def test_too_few_snapshots_rejected():
    with pytest.raises(ConfigValidationError, match="snapshots"):
        dataclasses.replace(default_scaled_config(), n_snapshots=2)


def test_serialize_parse_round_trip(tmp_path):
    cfg = default_scaled_config()
    path = tmp_path / "oracle.cfg"
    save_oracle_config(cfg, path)
    assert load_oracle_config(path) == cfg
    # quadratic configs round-trip too, including the filled curvature
    quad = quadratic_config()
    assert parse_oracle_config(serialize_oracle_config(quad)) == quad


# ---------------------------------------------------------------- defaults


def test_default_geometry_predictions():
    cfg = default_scaled_config()
    omega_c, omega_q = cfg.predicted_frequencies()
    expected = 8.0 * (705.0 / (400.0 - 16.0) - 1410.0 / (800.0 - 16.0))
    assert omega_q == pytest.approx(expected, rel=1e-12)
    # couplings 2:1 with distances sqrt(2):1 null the midpoint force
    assert abs(omega_c) < 1e-12


def test_quadratic_predictions_coincide():
    cfg = quadratic_config()
    omega_c, omega_q = cfg.predicted_frequencies()
    assert omega_c == omega_q == pytest.approx(0.0375 * 8.0)


# -------------------------------------------------------------- validation


def test_quadratic_run_transport_laws_agree_exactly():
    report = run_validation(quadratic_config(), tolerance=0.05)
    assert report.passed
    # zero cubic-and-higher derivatives: the corrected tangent is the
    # classical tangent bitwise, and the truncated remainder is empty
    assert report.omega_moyal_measured == report.omega_poisson_measured
    assert report.truncation_tail == 0.0
    assert report.omega_moyal_measured == pytest.approx(0.3, rel=1e-6)


def test_two_ball_run_recovers_both_frequencies():
    cfg = dataclasses.replace(
        default_scaled_config(),
        n_q=256,
        n_p=256,
        p_lo=-24.0,
        p_hi=24.0,
        hold_time=2.5,
        n_snapshots=6,
    )
    report = run_validation(cfg, tolerance=0.05)
    assert report.passed
    assert report.moyal_abs_error < 0.01 * report.omega_quantum_predicted
    assert abs(report.omega_poisson_measured) < 1e-8
    assert 0.0 < report.truncation_tail < 0.05
    assert report.coherence_initial == pytest.approx(0.5, abs=1e-6)
    assert report.coherence_final == pytest.approx(0.5, abs=1e-3)
    assert report.steps_per_segment >= 1
    assert report.dt <= cfg.hold_time / (cfg.n_snapshots - 1)


def test_unreachable_tolerance_fails_honestly():
    report = run_validation(quadratic_config(), tolerance=1e-18)
    assert not report.passed
    assert not report.moyal_pass


def test_nonpositive_tolerance_rejected():
    with pytest.raises(ConfigValidationError, match="tolerance"):
        run_validation(quadratic_config(), tolerance=0.0)


def test_grid_reaching_ball_centre_rejected():
    cfg = dataclasses.replace(
        default_scaled_config(), dist_left=8.0, coupling_left=1.0, coupling_right=2.0
    )
    with pytest.raises(DomainError):
        run_validation(cfg)


def test_report_file_format(tmp_path):
    report = run_validation(quadratic_config(), tolerance=0.05)
    path = tmp_path / "oracle_report.txt"
    write_report(report, path)
    text = path.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "potential = quadratic"
    assert lines[-1] == "passed = true"
    keys = {line.split(" = ")[0] for line in lines}
    for needed in (
        "omega_quantum_predicted",
        "omega_moyal_measured",
        "omega_poisson_measured",
        "truncation_tail",
        "poisson_pass",
        "moyal_pass",
        "steps_per_segment",
        "tolerance",
        "dt",
    ):
        assert needed in keys
    # every value renders on a single key = value line
    assert all(" = " in line for line in lines)
