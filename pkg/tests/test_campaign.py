import csv
import io
import json
import math
import random
import shutil
import sys
from pathlib import Path

import pytest

from stylefuzz.campaign import (BaselineScheduler, ConfigError, StyleScheduler, config_from_dict,
                                deterministic_view, iteration_seed, load_config, load_corpora, run_campaign)
from stylefuzz.styles import admissible_pairs

import support

LOOP_FUSION = support.SAMPLES / "loop_fusion.c"
SEEDS = support.CORPUS / "mini-c" / "seeds"
DONORS = support.CORPUS / "mini-c" / "donors"


def raw_config(tmp_path, **over):
    raw = {
        "optimization_corpus": str(DONORS),
        "seed_corpus": str(SEEDS),
        "output_dir": str(tmp_path / "out"),
        "rng_seed": 7,
        "budget": {"iterations": 10},
        "harness": {
            "pass": "loop-fusion",
            "command": ["{python}", "-S", "-E", "{data}/fakes/fake_opt.py", "--pass={pass}", "{input}"],
            "timeout_ms": 5000,
            "counters": [{"name": "loop_fusion", "pattern": r"^fused: (\d+)"}],
        },
        "weights": {"Cousins/Replicate": 1.0, "Cousins/Insert": 1.0},
    }
    for k, v in over.items():
        if v is None:
            raw.pop(k, None)
        else:
            raw[k] = v
    return raw


def donor_dir(tmp_path, *files):
    d = tmp_path / "donors"
    d.mkdir()
    for f in files:
        if isinstance(f, tuple):
            (d / f[0]).write_text(f[1])
        else:
            shutil.copy(f, d / Path(f).name)
    return d


class TestConfig:
    def test_shipped_configs_load(self):
        for name in ("loop_fusion.toml", "baseline.toml", "crash_adjacent.toml"):
            cfg = load_config(support.CONFIGS / name)
            assert cfg.harness.pass_name == "loop-fusion"
            assert cfg.optimization_corpus_dir.is_dir()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.toml")

    def test_bad_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("mode = \n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_missing_key(self, tmp_path):
        with pytest.raises(ConfigError, match="seed_corpus"):
            config_from_dict(raw_config(tmp_path, seed_corpus=None))

    @pytest.mark.parametrize("over,msg", [
        ({"weights": {"Cousins/Replicate": -1.0}}, "nonnegative"),
        ({"weights": {"Cousins/Replicate": 0.0}}, "all zero"),
        ({"weights": {"Exists/Move": 1.0}}, "not an admissible"),
        ({"weights": {"Cousins": 1.0}}, "Style/Mutator"),
        ({"workers": 0}, "workers"),
        ({"bounds": {"Cousins": {"q": 1}}}, "unknown bound"),
        ({"scheduler": "random"}, "scheduler"),
    ])
    def test_invalid(self, tmp_path, over, msg):
        with pytest.raises(ConfigError, match=msg):
            config_from_dict(raw_config(tmp_path, **over))

    def test_empty_budget_uses_default(self, tmp_path):
        assert config_from_dict(raw_config(tmp_path, budget={})).iterations == 100

    def test_targeted_needs_pass(self, tmp_path):
        raw = raw_config(tmp_path)
        del raw["harness"]["pass"]
        with pytest.raises(ConfigError, match="harness.pass"):
            config_from_dict(raw)

    def test_command_needs_input(self, tmp_path):
        raw = raw_config(tmp_path)
        raw["harness"]["command"] = ["opt"]
        with pytest.raises(ConfigError, match="input"):
            config_from_dict(raw)

    def test_relative_paths_follow_config_dir(self, tmp_path):
        raw = raw_config(tmp_path, optimization_corpus="donors")
        cfg = config_from_dict(raw, tmp_path)
        assert cfg.optimization_corpus_dir == tmp_path / "donors"


class TestCorpora:
    def test_loop_fusion_donor(self, tmp_path):
        cfg = config_from_dict(raw_config(tmp_path, optimization_corpus=str(donor_dir(tmp_path, LOOP_FUSION))))
        c = load_corpora(cfg)
        assert len(c.pool.matches("Cousins")) >= 1
        assert len(c.recipients) == 20
        assert c.skipped == []

    def test_empty_seed_dir(self, tmp_path):
        empty = tmp_path / "seeds"
        empty.mkdir()
        with pytest.raises(ConfigError, match="seed corpus is empty"):
            load_corpora(config_from_dict(raw_config(tmp_path, seed_corpus=str(empty))))

    def test_missing_dir(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            load_corpora(config_from_dict(raw_config(tmp_path, seed_corpus=str(tmp_path / "nope"))))

    def test_unparseable_donor_is_skipped(self, tmp_path):
        d = donor_dir(tmp_path, LOOP_FUSION, ("broken.c", "int f( {\n"))
        c = load_corpora(config_from_dict(raw_config(tmp_path, optimization_corpus=str(d))))
        assert len(c.skipped) == 1 and c.skipped[0].endswith("broken.c")
        assert list(c.donors) == ["loop_fusion.c"]

    def test_no_styles(self, tmp_path):
        d = donor_dir(tmp_path, ("empty.c", ""))
        with pytest.raises(ConfigError, match="no composition styles"):
            load_corpora(config_from_dict(raw_config(tmp_path, optimization_corpus=str(d))))


@pytest.fixture(scope="module")
def corpora(tmp_path_factory):
    return load_corpora(config_from_dict(raw_config(tmp_path_factory.mktemp("c"))))


class TestScheduler:
    def test_single_weight(self, corpora):
        s = StyleScheduler(corpora, {("Nesting", "Move"): 1.0, ("Cousins", "Replace"): 0.0})
        rng = random.Random(0)
        assert {s.draw_pair(rng) for _ in range(200)} == {("Nesting", "Move")}
        assert {s.next(i, 3).pair for i in range(10)} == {"Nesting/Move"}

    def test_uniform_default(self, corpora):
        s = StyleScheduler(corpora, {})
        assert set(s.pairs) == {p for p in admissible_pairs() if p[0] in corpora.pool.styles()}
        n = 10_000
        rng = random.Random(11)
        counts = {p: 0 for p in s.pairs}
        for _ in range(n):
            counts[s.draw_pair(rng)] += 1
        expect = n / len(s.pairs)
        chi2 = sum((c - expect) ** 2 / expect for c in counts.values())
        df = len(s.pairs) - 1
        # 3 standard deviations above the chi-square mean
        assert chi2 < df + 3 * math.sqrt(2 * df)

    def test_pairs_without_matches_are_dropped(self, tmp_path):
        # a loop-only donor has no if-else, hence no Balanced match
        d = donor_dir(tmp_path, ("loops.c", "int f(int n) { int s = 0; for (int i = 0; i < n; i++) { s += i; }"
                                            " for (int j = 0; j < n; j++) { s += j; } return s; }"))
        c = load_corpora(config_from_dict(raw_config(tmp_path, optimization_corpus=str(d))))
        assert "Balanced" not in c.pool.styles()
        s = StyleScheduler(c, {("Balanced", "Replace"): 5.0, ("Cousins", "Replicate"): 1.0})
        assert s.pairs == [("Cousins", "Replicate")]
        with pytest.raises(ConfigError):
            StyleScheduler(c, {("Balanced", "Replace"): 1.0})

    def test_next_is_a_function_of_seed_and_index(self, corpora):
        s = StyleScheduler(corpora, {})
        a = [s.next(i, 5).record() for i in range(15)]
        b = [s.next(i, 5).record() for i in reversed(range(15))][::-1]
        assert a == b
        assert iteration_seed(5, 1) != iteration_seed(5, 2) != iteration_seed(6, 2)

    def test_baseline_swaps_same_kind(self, corpora):
        s = BaselineScheduler(corpora)
        att = s.next(0, 1)
        assert att.ok and att.pair == "baseline/SubtreeSwap"
        assert att.provenance["swap"]["kind"] in s.by_kind


class TestRun:
    def test_zero_iterations(self, tmp_path):
        cfg = config_from_dict(raw_config(tmp_path, budget={"iterations": 0}))
        rep = run_campaign(cfg)
        t = rep["totals"]
        assert t["iterations"] == t["executed"] == t["valid_count"] == t["trigger_total"] == 0
        assert t["triggers"] == {"loop_fusion": 0} and t["crashes"] == {}
        assert (Path(cfg.output_dir) / "edits.jsonl").read_text() == ""

    def test_small_run_outputs(self, tmp_path):
        cfg = config_from_dict(raw_config(tmp_path, budget={"iterations": 12}))
        rep = run_campaign(cfg)
        out = Path(cfg.output_dir)
        lines = [json.loads(l) for l in (out / "edits.jsonl").read_text().splitlines()]
        assert [l["iteration"] for l in lines] == list(range(12))
        assert rep["totals"]["iterations"] == 12
        assert sum(p["attempts"] for p in rep["pairs"].values()) == 12
        assert json.loads((out / "report.json").read_text())["totals"] == rep["totals"]
        rows = list(csv.reader(io.StringIO((out / "report.csv").read_text())))
        assert rows[0] == ["minute", "iterations", "valid", "triggers", "crashes"]
        assert sum(int(r[1]) for r in rows[1:]) == 12
        assert not (out / "work").exists()

    def test_repeatable(self, tmp_path):
        views = []
        for k in range(2):
            cfg = config_from_dict(raw_config(tmp_path, output_dir=str(tmp_path / f"o{k}"),
                                              budget={"iterations": 15}))
            views.append(deterministic_view(run_campaign(cfg)))
        assert views[0] == views[1]

    def test_stop_event(self, tmp_path):
        import threading
        stop = threading.Event()
        stop.set()
        rep = run_campaign(config_from_dict(raw_config(tmp_path)), stop)
        assert rep["totals"]["interrupted"] and rep["totals"]["iterations"] == 0

    def test_crash_bucket_persisted(self, tmp_path):
        raw = raw_config(tmp_path, budget={"iterations": 30}, rng_seed=3,
                         weights={"Cousins/Replicate": 1.0})
        raw["harness"]["command"] = ["{python}", "-S", "-E", "{data}/fakes/crash_adjacent.py", "{input}"]
        cfg = config_from_dict(raw)
        rep = run_campaign(cfg)
        crashes = rep["totals"]["crashes"]
        assert crashes
        for sig, entry in crashes.items():
            d = Path(cfg.output_dir) / "crashes" / sig
            assert (Path(cfg.output_dir) / entry["reproducer"]).is_file()
            prov = json.loads((d / "provenance.json").read_text())
            assert prov["signature"] == sig and prov["exit"] == "signal"
            assert {"donor_id", "recipient_id", "style", "kind"} <= set(prov)

    def test_spawn_failure(self, tmp_path):
        from stylefuzz.harness import SpawnError
        raw = raw_config(tmp_path)
        raw["harness"]["command"] = ["/no/such/binary", "{input}"]
        with pytest.raises(SpawnError):
            run_campaign(config_from_dict(raw))


def test_python_placeholder_is_current_interpreter(tmp_path):
    cfg = config_from_dict(raw_config(tmp_path))
    assert cfg.harness.argv(cfg.harness.command, "x.c")[0] == sys.executable
