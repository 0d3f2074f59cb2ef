import json
import random

import pytest

from zfdt.clients import StubGenerator
from zfdt.corpus import ConflictTag
from zfdt.dataset import (
    CONFLICT_WARNINGS,
    DpoRecord,
    SftRecord,
    build_conflict_record,
    build_dpo_record,
    build_sft_record,
    export,
    format_input,
    import_records,
    split_input,
)
from zfdt.errors import DegeneratePair, InvalidInput

INSTRUCTION = "Recommend a TCM formula and provide detailed explanations based on the symptoms"


class TestSftRecord:
    def test_instruction_is_byte_exact(self):
        record = build_sft_record("night sweats", "[diseases] context", "take this formula")
        assert record.instruction == INSTRUCTION

    def test_empty_context_rejected(self):
        with pytest.raises(InvalidInput):
            build_sft_record("x", "  ", "y")

    def test_input_round_trips_through_delimiters(self):
        x = "symptom line one\nsymptom line two"
        c = "[diseases] retrieved\n[pulse_tongue] more"
        record = build_sft_record(x, c, "output")
        assert split_input(record.input) == (x, c)

    def test_split_rejects_undelimited_text(self):
        with pytest.raises(InvalidInput):
            split_input("no delimiters here")


class TestDpoRecord:
    def test_stub_pair_prefers_fuller_template(self, generator):
        record = build_dpo_record("fatigue", "[diseases] retrieved context", generator)
        assert record.score_w >= record.score_l
        assert record.chosen != record.rejected
        assert record.chosen.count("\n") > record.rejected.count("\n")

    def test_identical_pair_propagates(self):
        generator = StubGenerator(force_identical_pair=True)
        with pytest.raises(DegeneratePair):
            build_dpo_record("fatigue", "[diseases] c", generator)

    def test_three_thousand_record_batch(self, generator):
        # the paper-scale preference-pair count, built at desk speed
        contexts = [f"[diseases] retrieved context {i % 7}" for i in range(3000)]
        records = [build_dpo_record(f"symptoms {i}", c, generator) for i, c in enumerate(contexts)]
        assert len(records) == 3000
        assert all(r.score_w >= r.score_l and r.chosen != r.rejected for r in records)


class TestConflictRecord:
    @pytest.mark.parametrize("tag", list(ConflictTag))
    def test_output_contains_warning(self, tag):
        record = build_conflict_record("x", "c", "base answer", tag)
        assert record.warning_text == CONFLICT_WARNINGS[tag]
        assert record.base.output.endswith(record.warning_text)
        assert record.conflict_type is tag


class TestExportImport:
    def test_sft_lines_have_exact_keys(self, tmp_path):
        records = [
            build_sft_record("x1", "c1", "y1"),
            build_sft_record("x2", "c2", "y2"),
        ]
        path = tmp_path / "sft.jsonl"
        export(records, path, "sft")
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 2
        for line in lines:
            assert set(json.loads(line)) == {"instruction", "input", "output"}

    def test_dpo_line_keys(self, tmp_path, generator):
        record = build_dpo_record("x", "[diseases] c", generator)
        path = tmp_path / "dpo.jsonl"
        export([record], path, "dpo")
        obj = json.loads(path.read_text(encoding="utf-8").strip())
        assert set(obj) == {"instruction", "input", "chosen", "rejected"}

    def test_sft_round_trip_is_identity_on_random_records(self, tmp_path):
        rng = random.Random(0)
        alphabet = "abc def\n中药 ghi"
        records = [
            build_sft_record(
                "".join(rng.choice(alphabet) for _ in range(20)),
                "".join(rng.choice(alphabet) for _ in range(30)),
                "".join(rng.choice(alphabet) for _ in range(25)),
            )
            for _ in range(100)
        ]
        path = tmp_path / "sft.jsonl"
        export(records, path, "sft")
        assert import_records(path, "sft") == records

    def test_dpo_round_trip_preserves_canonical_fields(self, tmp_path, generator):
        records = [
            build_dpo_record(f"x{i}", f"[diseases] context {i}", generator) for i in range(5)
        ]
        path = tmp_path / "dpo.jsonl"
        export(records, path, "dpo")
        loaded = import_records(path, "dpo")
        for got, want in zip(loaded, records):
            assert (got.instruction, got.input, got.chosen, got.rejected) == (
                want.instruction,
                want.input,
                want.chosen,
                want.rejected,
            )
        # wire-level identity: re-exporting the import reproduces the file
        second = tmp_path / "dpo2.jsonl"
        export(loaded, second, "dpo")
        assert second.read_bytes() == path.read_bytes()

    def test_kind_mismatch_rejected(self, tmp_path):
        with pytest.raises(InvalidInput):
            export([build_sft_record("x", "c", "y")], tmp_path / "f.jsonl", "dpo")

    def test_empty_export_rejected(self, tmp_path):
        with pytest.raises(InvalidInput):
            export([], tmp_path / "f.jsonl", "sft")
