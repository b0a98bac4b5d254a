import json

import pytest

from app.errors import InfeasibleError, InstanceError, PopulationCountError
from app.fairness.profile_space import ScoreTable, TargetVector
from app.services.correction_service import CorrectionService
from app.services.instance_service import Instance


def _read_scores(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)["scores"]


class TestAudit:
    def test_worked_instance(self, worked_instance):
        report = CorrectionService(worked_instance).audit()
        assert report.command == "audit"
        assert [e.average for e in report.pre] == pytest.approx([1.7, 2.3])
        assert [e.gap for e in report.pre] == pytest.approx([0.0, 0.6])
        assert report.max_gap_pre == pytest.approx(0.6)
        assert report.post is None

    def test_without_targets_uses_the_mean_average(self, worked_instance):
        instance = Instance(
            space=worked_instance.space,
            populations=worked_instance.populations,
            scores=worked_instance.scores,
        )
        report = CorrectionService(instance).audit()
        assert [e.target for e in report.pre] == pytest.approx([2.0, 2.0])
        assert report.max_gap_pre == pytest.approx(0.3)

    def test_other_score_table(self, worked_instance):
        report = CorrectionService(worked_instance).audit(ScoreTable((2.0, 1.0, 2.0)))
        assert report.max_gap_pre == pytest.approx(0.0, abs=1e-12)


class TestTwoPop:
    def test_worked_instance(self, worked_instance, tmp_path):
        out = tmp_path / "h.json"
        report = CorrectionService(worked_instance).two_pop(str(out))
        assert report.k == pytest.approx(1.0)
        assert report.sign_pattern == {"plus": 1, "minus": 2}
        assert _read_scores(out) == pytest.approx([2.0, 1.0, 2.0])
        post = [e.average for e in report.post]
        assert post[0] == pytest.approx(post[1], abs=1e-12)
        assert report.correction_sup_norm == pytest.approx(1.0)
        assert report.output == str(out)

    def test_needs_exactly_two_populations(self, instance_factory, tmp_path):
        instance = instance_factory(seed=1, cells=5, pops=3)
        with pytest.raises(PopulationCountError):
            CorrectionService(instance).two_pop(str(tmp_path / "h.json"))
        assert not (tmp_path / "h.json").exists()

    def test_verify_agrees_on_small_instances(self, worked_instance, tmp_path):
        service = CorrectionService(worked_instance, verify=True)
        report = service.two_pop(str(tmp_path / "h.json"))
        assert report.verification["result"] == "agree"


class TestRemove:
    def test_worked_instance(self, worked_instance, tmp_path):
        out = tmp_path / "h.json"
        report = CorrectionService(worked_instance).remove(str(out))
        assert report.gamma == pytest.approx(1.0, abs=1e-9)
        assert report.groups == 3
        assert report.solver_status == "optimal"
        assert report.max_gap_post <= 1e-7
        assert _read_scores(out) == pytest.approx([2.0, 1.0, 2.0], abs=1e-9)

    def test_targets_at_the_current_averages(self, instance_factory, tmp_path):
        instance = instance_factory(seed=8, cells=6, pops=3, with_targets=False)
        targets = CorrectionService(instance).audit().pre
        fair = Instance(
            space=instance.space,
            populations=instance.populations,
            scores=instance.scores,
            targets=TargetVector(tuple(e.average for e in targets)),
        )
        out = tmp_path / "h.json"
        report = CorrectionService(fair).remove(str(out))
        assert report.gamma == pytest.approx(0.0, abs=1e-12)
        assert _read_scores(out) == pytest.approx(list(instance.scores.values), abs=1e-12)

    def test_single_group_with_conflicting_targets(self, worked_instance, tmp_path):
        service = CorrectionService(worked_instance, partition="single")
        with pytest.raises(InfeasibleError) as exc_info:
            service.remove(str(tmp_path / "h.json"))
        assert "inverse" in str(exc_info.value)

    def test_missing_targets(self, worked_instance, tmp_path):
        instance = Instance(
            space=worked_instance.space,
            populations=worked_instance.populations,
            scores=worked_instance.scores,
        )
        with pytest.raises(InstanceError):
            CorrectionService(instance).remove(str(tmp_path / "h.json"))

    def test_partition_file(self, worked_instance, write_json, tmp_path):
        partition_file = write_json("p.json", [1, 2, 2])
        report = CorrectionService(worked_instance, partition=partition_file).remove(
            str(tmp_path / "h.json")
        )
        assert report.groups == 2
        assert report.gamma == pytest.approx(1.0, abs=1e-9)

    def test_dump_lp(self, worked_instance, tmp_path):
        listing = tmp_path / "model.lp"
        service = CorrectionService(worked_instance, dump_lp=str(listing), verify=True)
        report = service.remove(str(tmp_path / "h.json"))
        assert report.verification["result"] == "agree"
        text = listing.read_text(encoding="utf-8")
        assert text.startswith("\\ forward model")
        # the relaxed verification model does not replace the listing
        assert "hit_upper1" in text

    @pytest.mark.parametrize("seed", range(10))
    def test_random_instances_hit_their_targets(self, instance_factory, seed, tmp_path):
        instance = instance_factory(seed=50 + seed, cells=12, pops=1 + seed % 4)
        report = CorrectionService(instance).remove(str(tmp_path / "h.json"))
        assert report.max_gap_post <= 1e-7
        assert report.correction_sup_norm == pytest.approx(report.gamma, abs=1e-7)


class TestInverse:
    def test_zero_budget_changes_nothing(self, worked_instance, tmp_path):
        out = tmp_path / "h.json"
        report = CorrectionService(worked_instance).inverse(str(out), 0.0)
        assert report.gamma == pytest.approx(0.6)
        assert _read_scores(out) == pytest.approx([1.0, 2.0, 3.0])
        assert report.correction_sup_norm == pytest.approx(0.0, abs=1e-12)

    def test_half_budget_on_one_cell(self, one_cell_instance, tmp_path):
        report = CorrectionService(one_cell_instance, verify=True).inverse(
            str(tmp_path / "h.json"), 0.25
        )
        assert report.gamma == pytest.approx(0.25)
        assert report.correction_sup_norm == pytest.approx(0.25)
        assert report.verification["result"] == "agree"

    def test_budget_at_the_forward_optimum_closes_the_gap(self, worked_instance, tmp_path):
        report = CorrectionService(worked_instance).inverse(str(tmp_path / "h.json"), 1.0)
        assert report.gamma == pytest.approx(0.0, abs=1e-9)
        assert report.max_gap_post <= 1e-7

    def test_negative_budget(self, worked_instance, tmp_path):
        with pytest.raises(InstanceError):
            CorrectionService(worked_instance).inverse(str(tmp_path / "h.json"), -0.1)

    def test_single_group_stays_feasible(self, worked_instance, tmp_path):
        service = CorrectionService(worked_instance, partition="single")
        report = service.inverse(str(tmp_path / "h.json"), 5.0)
        # one flat shift cannot split the two averages, so half the spread remains
        assert report.gamma == pytest.approx(0.3, abs=1e-9)


class TestTradeoff:
    def test_series_spans_twice_the_forward_optimum(self, worked_instance):
        report = CorrectionService(worked_instance).tradeoff(points=5)
        assert report.gamma == pytest.approx(1.0, abs=1e-9)
        epsilons = [point["epsilon"] for point in report.series]
        assert epsilons == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
        gammas = [point["gamma"] for point in report.series]
        assert gammas[0] == pytest.approx(0.6)
        assert all(b <= a + 1e-9 for a, b in zip(gammas, gammas[1:]))
        assert gammas[2] == pytest.approx(0.0, abs=1e-7)

    def test_needs_two_points(self, worked_instance):
        with pytest.raises(InstanceError):
            CorrectionService(worked_instance).tradeoff(points=1)
