"""End-to-end extraction runs."""

import json

import pytest

import extractor.runner as runner_module
from extractor.config import ExtractorConfig, ModelDecl
from extractor.errors import CheckpointError
from extractor.runner import extract


def two_model_config(corpus_file, tmp_path, causal_ckpt, masked_ckpt):
    return ExtractorConfig(
        corpus=corpus_file,
        output=tmp_path / "scores.jsonl",
        models=(
            ModelDecl("tiny", causal_ckpt, "causal"),
            ModelDecl("tiny-mlm", masked_ckpt, "masked"),
        ),
    )


class TestExtract:
    def test_one_record_per_item_and_model(
        self, corpus_file, tmp_path, causal_checkpoint, masked_checkpoint
    ):
        config = two_model_config(
            corpus_file, tmp_path, causal_checkpoint, masked_checkpoint
        )
        summary = extract(config)
        assert summary.n_models == 2
        assert summary.n_records == 6
        assert summary.skipped == ()

        lines = [
            json.loads(l)
            for l in (tmp_path / "scores.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert len(lines) == 8
        headers = [l for l in lines if "format_version" in l]
        records = [l for l in lines if "format_version" not in l]
        assert [h["model_id"] for h in headers] == ["tiny", "tiny-mlm"]
        assert {r["model_id"] for r in records} == {"tiny", "tiny-mlm"}
        assert {r["condition"] for r in records} == {
            "Predictable", "Related", "Unrelated",
        }

    def test_headers_carry_provenance(
        self, corpus_file, tmp_path, causal_checkpoint, masked_checkpoint
    ):
        config = two_model_config(
            corpus_file, tmp_path, causal_checkpoint, masked_checkpoint
        )
        extract(config)
        lines = (tmp_path / "scores.jsonl").read_text(encoding="utf-8").splitlines()
        causal_header = json.loads(lines[0])
        assert causal_header["format_version"] == 1
        assert causal_header["checkpoint"] == causal_checkpoint
        assert causal_header["detokenize"] == "strip_space_markers"
        masked_header = json.loads(lines[4])
        assert masked_header["detokenize"] == "wordpiece"
        assert masked_header["lowercases"] is True

    def test_model_order_preserved(
        self, corpus_file, tmp_path, causal_checkpoint, masked_checkpoint
    ):
        config = ExtractorConfig(
            corpus=corpus_file,
            output=tmp_path / "scores.jsonl",
            models=(
                ModelDecl("b", masked_checkpoint, "masked"),
                ModelDecl("a", causal_checkpoint, "causal"),
            ),
        )
        extract(config)
        lines = (tmp_path / "scores.jsonl").read_text(encoding="utf-8").splitlines()
        headers = [
            json.loads(l)["model_id"]
            for l in lines
            if "format_version" in json.loads(l)
        ]
        assert headers == ["b", "a"]

    def test_deterministic_bytes(
        self, corpus_file, tmp_path, causal_checkpoint, masked_checkpoint
    ):
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        for out in (out_a, out_b):
            extract(
                ExtractorConfig(
                    corpus=corpus_file,
                    output=out,
                    models=(ModelDecl("tiny", causal_checkpoint, "causal"),),
                )
            )
        assert out_a.read_bytes() == out_b.read_bytes()


class TestFailureModes:
    def test_unresolvable_checkpoint_is_fatal(self, corpus_file, tmp_path):
        config = ExtractorConfig(
            corpus=corpus_file,
            output=tmp_path / "scores.jsonl",
            models=(ModelDecl("ghost", str(tmp_path / "absent"), "causal"),),
        )
        with pytest.raises(CheckpointError, match="ghost"):
            extract(config)

    def test_oom_model_skipped_with_warning(
        self, corpus_file, tmp_path, causal_checkpoint, monkeypatch, caplog
    ):
        real = runner_module.load_model

        def flaky(decl, device):
            if decl.model_id == "oomy":
                raise RuntimeError("CUDA error: out of memory")
            return real(decl, device)

        monkeypatch.setattr(runner_module, "load_model", flaky)
        config = ExtractorConfig(
            corpus=corpus_file,
            output=tmp_path / "scores.jsonl",
            models=(
                ModelDecl("oomy", causal_checkpoint, "causal"),
                ModelDecl("tiny", causal_checkpoint, "causal"),
            ),
        )
        with caplog.at_level("WARNING", logger="extractor.runner"):
            summary = extract(config)
        assert summary.skipped == ("oomy",)
        assert summary.n_models == 1
        assert summary.n_records == 3
        assert any("oomy" in m for m in caplog.messages)
        # nothing from the skipped model reaches the file
        lines = (tmp_path / "scores.jsonl").read_text(encoding="utf-8").splitlines()
        assert all(json.loads(l)["model_id"] == "tiny" for l in lines)

    def test_other_runtime_errors_propagate(
        self, corpus_file, tmp_path, monkeypatch
    ):
        def broken(decl, device):
            raise RuntimeError("shape mismatch")

        monkeypatch.setattr(runner_module, "load_model", broken)
        config = ExtractorConfig(
            corpus=corpus_file,
            output=tmp_path / "scores.jsonl",
            models=(ModelDecl("tiny", "/irrelevant", "causal"),),
        )
        with pytest.raises(RuntimeError, match="shape mismatch"):
            extract(config)
