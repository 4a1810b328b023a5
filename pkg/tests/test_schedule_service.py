"""
Unit tests for schedule_service: circular-gap verification, evaluation,
compact expansion and schedule files.
"""
import time
from fractions import Fraction

import pytest

from models import CompactSchedule, CongruenceClass, Schedule, ScheduleError
from services.schedule_service import (
    evaluate, expand, load_schedule, make_report, parse_schedule, rotate,
    save_schedule, verify,
)
from tests.helpers.instance_helpers import make_path, make_star


# ===================================================================
# Verification
# ===================================================================

class TestVerify:
    """Gaps are measured circularly against original turnovers."""

    def test_feasible_star_schedule(self, unit_star):
        schedule = Schedule(4, ((1, 2), (1, 3), (1, 2), (1, 3)))
        assert verify(unit_star, schedule).feasible

    def test_wrap_gap_detected(self):
        inst = make_star([1], [3])
        # visits on day 1 only of a period-4 plan: wrap gap 4 > 3
        report = verify(inst, Schedule(4, ((1,), (), (), ())))
        assert not report.feasible
        v = report.violations[0]
        assert (v.vertex, v.kind, v.gap, v.wrap) == (1, 'gap', 4, True)
        assert "wrap" in v.description

    def test_interior_gap_detected(self):
        inst = make_star([1], [2])
        report = verify(inst, Schedule(4, ((1,), (), (), (1,))))
        assert not report.feasible
        assert report.violations[0].wrap is False
        assert report.violations[0].gap == 3

    def test_never_visited(self, unit_star):
        report = verify(unit_star, Schedule(2, ((1, 2), (1, 2))))
        assert [v.vertex for v in report.violations] == [3]
        assert report.violations[0].kind == 'never-visited'

    def test_duplicate_visits_count_once(self):
        inst = make_star([1], [1])
        assert verify(inst, Schedule(1, ((1, 1),))).feasible

    def test_checks_original_not_effective(self):
        inst = make_path([1, 1], [4, 2]).with_effective({1: 8})
        assert verify(inst, Schedule(4, ((1, 2), (2,), (1, 2), (2,)))).feasible
        assert not verify(inst, Schedule(5, ((1, 2),) + ((2,),) * 4)).feasible

    def test_unknown_vertex(self, unit_star):
        with pytest.raises(ScheduleError, match="unknown vertex id 9"):
            verify(unit_star, Schedule(1, ((1, 2, 3, 9),)))

    def test_zero_period_rejected(self):
        with pytest.raises(ScheduleError, match="period"):
            Schedule(0, ())

    def test_compact_schedule(self, unit_star):
        compact = CompactSchedule((
            CongruenceClass(0, 2, frozenset({1})),
            CongruenceClass(1, 4, frozenset({2})),
            CongruenceClass(3, 4, frozenset({3})),
        ))
        assert compact.period == 4
        assert verify(unit_star, compact).feasible
        bad = CompactSchedule((CongruenceClass(0, 3, frozenset({1, 2, 3})),))
        assert not verify(unit_star, bad).feasible


# ===================================================================
# Evaluation
# ===================================================================

class TestEvaluate:

    def test_avg_and_max(self, halfline):
        schedule = Schedule(2, ((1, 2, 3), (1,)))
        ev = evaluate(halfline, schedule)
        assert ev.per_day == (Fraction(6), Fraction(2))
        assert ev.avg == 4
        assert ev.max == 6

    def test_idle_day_costs_nothing(self, unit_star):
        ev = evaluate(unit_star, Schedule(2, ((), (1,))))
        assert ev.per_day == (0, 2)
        assert ev.avg == 1

    def test_rotation_preserves_cost(self, halfline):
        schedule = Schedule(3, ((1, 2), (1,), (1, 2, 3)))
        rotated = rotate(schedule, 2)
        assert rotated.days[0] == (1, 2, 3)
        assert evaluate(halfline, rotated).avg == evaluate(halfline, schedule).avg
        assert verify(halfline, rotated).feasible == verify(halfline, schedule).feasible


# ===================================================================
# Compact expansion and files
# ===================================================================

class TestExpandAndFiles:

    def test_expand_over_lcm(self):
        compact = CompactSchedule((
            CongruenceClass(0, 2, frozenset({2})),
            CongruenceClass(0, 3, frozenset({1})),
        ))
        schedule = expand(compact)
        assert schedule.period == 6
        assert schedule.visits(2) == (2,)
        assert schedule.visits(3) == (1,)
        assert schedule.visits(6) == (1, 2)
        assert schedule.visits(1) == ()

    def test_bad_residue(self):
        with pytest.raises(ScheduleError, match="residue"):
            CongruenceClass(3, 3, frozenset())

    def test_schedule_file_roundtrip(self, tmp_path):
        schedule = Schedule(2, ((1, 2), (3,)))
        path = tmp_path / "s.json"
        save_schedule(schedule, str(path))
        assert load_schedule(str(path)) == schedule

    def test_parse_rejects_zero_period(self):
        with pytest.raises(ScheduleError, match="zero period"):
            parse_schedule({"period": 0, "days": []})

    def test_parse_rejects_malformed(self):
        with pytest.raises(ScheduleError, match="malformed"):
            parse_schedule({"days": [[1]]})


class TestMakeReport:

    def test_feasible_report(self, unit_star):
        schedule = Schedule(4, ((1, 2), (1, 3), (1, 2), (1, 3)))
        report = make_report(unit_star, schedule, "manual", "min-avg", Fraction(1),
                             time.perf_counter())
        assert report.feasible is True
        assert report.avg == 4
        assert report.cost == 4
        assert report.ratio == 4
        assert report.to_dict()["ratio"] == "4.000000"

    def test_infeasible_report_carries_violations(self, unit_star):
        report = make_report(unit_star, Schedule(1, ((1,),)), "manual", "min-max", None,
                             time.perf_counter())
        assert report.feasible is False
        assert "never visited" in report.error
        assert report.ratio is None
