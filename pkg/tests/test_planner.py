from dataclasses import replace

import pytest

from nmext.errors import InfeasiblePlan
from nmext.planner import PROFILES, PlannerConfig, coerce_override, plan, relation_table, relations, validate

# advice widths of the default n=12, k=6 plans, frozen after the first resolution
LOCKED_ADVICE_WIDTH = {"polylog2src": 34, "polylogaffine": 30, "const2src": 36, "constaffine": 27}


def test_const2src_constants():
    cfg = plan(12, 6, 0.25, "const2src")
    assert cfg.alpha == 0.5
    assert cfg.delta_prime == 0.1
    assert cfg.k1 == 2 * cfg.m2


def test_entropy_relation_enforced():
    with pytest.raises(InfeasiblePlan) as exc:
        plan(12, 6, 0.25, "const2src", k1=5)
    assert "k1" in exc.value.relation


def test_output_cannot_exceed_entropy():
    with pytest.raises(InfeasiblePlan) as exc:
        plan(12, 6, 0.25, "polylog2src", m_prime=7)
    assert "m'" in exc.value.relation


@pytest.mark.parametrize("args", [(4, 8, 0.25), (12, 0, 0.25), (12, 6, 0.0), (12, 6, 1.5), (20, 6, 0.25)])
def test_bad_headline_parameters(args):
    with pytest.raises(InfeasiblePlan):
        plan(*args, "const2src")


def test_unknown_profile_and_key():
    with pytest.raises(InfeasiblePlan):
        plan(12, 6, 0.25, "quantum")
    with pytest.raises(ValueError):
        plan(12, 6, 0.25, "const2src", colour=3)


@pytest.mark.parametrize("profile", PROFILES)
def test_defaults_validate_and_roundtrip(profile):
    cfg = plan(12, 6, 0.25, profile)
    validate(cfg)
    assert cfg.a == LOCKED_ADVICE_WIDTH[profile]
    text = cfg.to_text()
    assert PlannerConfig.from_text(text) == cfg
    assert plan(12, 6, 0.25, profile).to_text() == text
    assert all(r.holds or not r.enforced for r in relations(cfg))


@pytest.mark.parametrize("profile", ["polylog2src", "polylogaffine"])
def test_row_count_is_odd(profile):
    cfg = plan(12, 6, 0.25, profile)
    assert cfg.D == (1 << cfg.d) - 1 and cfg.D % 2 == 1


def test_index_suffix_width():
    cfg = plan(12, 6, 0.25, "const2src", B=4)
    assert cfg.b == (cfg.D - 1).bit_length() + (cfg.B - 1).bit_length()
    assert "B" in cfg.override_keys


def test_overrides_reach_dependent_defaults():
    cfg = plan(10, 5, 0.25, "constaffine", beta=1.25)
    assert cfg.m == 4 and cfg.beta * cfg.m <= cfg.k


def test_from_text_comments_and_errors():
    text = plan(12, 6, 0.25, "polylog2src").to_text()
    commented = "# header\n" + text.replace("seed = 0", "seed = 0   # construction seed")
    assert PlannerConfig.from_text(commented) == PlannerConfig.from_text(text)
    with pytest.raises(ValueError, match="line 2"):
        PlannerConfig.from_text("profile = const2src\nn twelve\n")
    with pytest.raises(ValueError, match="unknown key"):
        PlannerConfig.from_text("profile = const2src\ncolour = 3\n")
    with pytest.raises(ValueError, match="line 2"):
        PlannerConfig.from_text("profile = const2src\nn = twelve\n")
    with pytest.raises(ValueError, match="missing"):
        PlannerConfig.from_text("profile = const2src\n")


def test_relation_table_marks_overrides_and_relaxations():
    cfg = plan(12, 6, 0.25, "const2src", B=4)
    rows = relation_table(cfg).splitlines()
    assert any(r.startswith("B ") and "override" in r for r in rows)
    aff = relation_table(plan(12, 6, 0.25, "polylogaffine"))
    assert "relaxed" in aff


def test_validate_catches_hand_edited_config():
    cfg = plan(12, 6, 0.25, "const2src")
    with pytest.raises(InfeasiblePlan):
        validate(replace(cfg, D=14))


def test_coerce_override():
    assert coerce_override("B", "4") == 4
    assert coerce_override("eps2", "0.1") == 0.1
    with pytest.raises(ValueError):
        coerce_override("B", "four")
    with pytest.raises(ValueError):
        coerce_override("colour", "1")
