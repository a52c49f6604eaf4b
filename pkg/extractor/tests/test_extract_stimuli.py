"""Stimulus TSV reading."""

import pytest

from conftest import STIMULUS_ROWS, write_stimuli
from extractor.errors import CorpusError
from extractor.stimuli import read_stimuli


def test_reads_three_items(corpus_file):
    rows = read_stimuli(corpus_file)
    assert len(rows) == 3
    assert rows[0].experiment_id == "exp1"
    assert rows[0].condition == "Predictable"
    assert rows[0].pre_context == "the rider was wearing his"
    assert rows[0].critical_word == "helmet"
    assert [r.condition for r in rows] == ["Predictable", "Related", "Unrelated"]


def test_extra_columns_ignored(corpus_file):
    # post_context and cloze are present in the file but not part of a row
    rows = read_stimuli(corpus_file)
    assert not hasattr(rows[0], "post_context")


def test_missing_column_rejected(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text(
        "experiment_id\tframe_id\tcondition\tpre_context\nexp1\tf01\tRelated\tthe\n",
        encoding="utf-8",
    )
    with pytest.raises(CorpusError, match="critical_word"):
        read_stimuli(path)


def test_unknown_condition_rejected(tmp_path):
    rows = [STIMULUS_ROWS[0][:2] + ("Baseline",) + STIMULUS_ROWS[0][3:]]
    path = write_stimuli(tmp_path / "bad.tsv", rows)
    with pytest.raises(CorpusError, match="Baseline"):
        read_stimuli(path)


def test_duplicate_item_rejected(tmp_path):
    path = write_stimuli(tmp_path / "bad.tsv", [STIMULUS_ROWS[0], STIMULUS_ROWS[0]])
    with pytest.raises(CorpusError, match="duplicate"):
        read_stimuli(path)


def test_empty_word_rejected(tmp_path):
    rows = [STIMULUS_ROWS[0][:5] + ("", "0.9")]
    path = write_stimuli(tmp_path / "bad.tsv", rows)
    with pytest.raises(CorpusError, match="empty critical_word"):
        read_stimuli(path)


def test_short_row_rejected(tmp_path):
    path = tmp_path / "bad.tsv"
    header = "experiment_id\tframe_id\tcondition\tpre_context\tpost_context\tcritical_word\tcloze"
    path.write_text(header + "\nexp1\tf01\tRelated\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="short row"):
        read_stimuli(path)


def test_no_rows_rejected(tmp_path):
    path = write_stimuli(tmp_path / "empty.tsv", [])
    with pytest.raises(CorpusError, match="no stimulus rows"):
        read_stimuli(path)


def test_missing_file(tmp_path):
    with pytest.raises(CorpusError, match="cannot read"):
        read_stimuli(tmp_path / "absent.tsv")
