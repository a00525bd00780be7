from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from usrep.segmenter import (
    DEFAULT_DELIMITERS,
    Fragment,
    LanguageMismatchError,
    Report,
    fragment_diff,
    normalize_text,
    segment_report,
)

from conftest import ZH_CHARS, make_report


def test_normalize_empty():
    assert normalize_text("") == ""


def test_normalize_whitespace_collapse():
    assert normalize_text(" A  B ") == "A B"


def test_normalize_fullwidth_ascii_folds():
    assert normalize_text("ＣＦＤＩ") == "CFDI"


def test_normalize_preserves_case():
    assert normalize_text("CFDI Signal") == "CFDI Signal"


@given(st.text(max_size=80))
def test_normalize_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


def test_segment_ascii_delimiters():
    frags = segment_report("A,B;C.D.")
    assert [f.raw for f in frags] == ["A", "B", "C", "D"]
    assert [f.index for f in frags] == [0, 1, 2, 3]


def test_segment_fullwidth_delimiters():
    frags = segment_report("甲状腺大小正常，形态规则；包膜完整。")
    assert [f.raw for f in frags] == ["甲状腺大小正常", "形态规则", "包膜完整"]


def test_segment_drops_empty_pieces():
    assert [f.raw for f in segment_report("x,,y")] == ["x", "y"]


def test_segment_only_delimiters_is_empty():
    assert segment_report(",;.。  ，") == []


def test_segment_decimal_point_not_a_delimiter():
    frags = segment_report("结节大小1.5cm，边界清晰。")
    assert [f.raw for f in frags] == ["结节大小1.5cm", "边界清晰"]


def test_segment_period_next_to_letters_still_splits():
    assert [f.raw for f in segment_report("a.b")] == ["a", "b"]


def test_segment_fills_normalized_and_language():
    frags = segment_report("ＣＦＤＩ正常，大小  正常。", language="zh")
    assert frags[0].normalized == "CFDI正常"
    assert frags[1].normalized == "大小 正常"
    assert all(f.language == "zh" for f in frags)


def test_segment_rejects_empty_delimiters():
    with pytest.raises(ValueError):
        segment_report("a,b", delimiters=frozenset())


fragment_text = st.text(
    alphabet=st.sampled_from(ZH_CHARS + "abcXYZ019 "), min_size=1, max_size=12
).filter(lambda s: normalize_text(s) != "")


@given(st.lists(fragment_text, min_size=1, max_size=8), st.sampled_from(sorted(DEFAULT_DELIMITERS)))
def test_segment_roundtrip_partition(pieces, delim):
    text = delim.join(pieces)
    raws = [f.raw for f in segment_report(text)]
    rejoined = delim.join(raws)
    assert [f.raw for f in segment_report(rejoined)] == raws


@given(st.text(max_size=60))
def test_segment_raw_has_no_splitting_delimiter(text):
    for f in segment_report(text):
        for i, ch in enumerate(f.raw):
            if ch in DEFAULT_DELIMITERS:
                # only a digit-flanked period may survive inside a fragment
                assert ch == "."
                assert 0 < i < len(f.raw) - 1
                assert f.raw[i - 1].isdigit() and f.raw[i + 1].isdigit()


def test_report_requires_two_images():
    with pytest.raises(ValueError):
        Report(id="x", site="thyroid", language="zh", text="t", images=("one",))


def test_report_rejects_blank_text():
    with pytest.raises(ValueError):
        make_report(text="  　 ")


def test_report_rejects_unknown_language():
    with pytest.raises(ValueError):
        make_report(text="ok", language="fr")


def test_fragment_requires_nonempty_raw():
    with pytest.raises(ValueError):
        Fragment(raw="", normalized="", language="zh", index=0)


def test_diff_identity(zh_reports):
    report = zh_reports[0]
    diff = fragment_diff(report, report)
    assert diff.extra == [] and diff.missing == []
    assert len(diff.matched) == len(segment_report(report.text))


def test_diff_simple_substitution():
    pred = make_report("p", text="A,B")
    ref = make_report("q", text="A,C")
    diff = fragment_diff(pred, ref)
    assert [(p.raw, r.raw) for p, r in diff.matched] == [("A", "A")]
    assert [f.raw for f in diff.extra] == ["B"]
    assert [f.raw for f in diff.missing] == ["C"]


def test_diff_multiplicity():
    diff = fragment_diff(make_report("p", text="A,A"), make_report("q", text="A"))
    assert len(diff.matched) == 1
    assert [f.raw for f in diff.extra] == ["A"]
    assert diff.missing == []


def test_diff_language_mismatch():
    zh = make_report("p", text="正常", language="zh")
    en = make_report("q", text="normal", language="en")
    with pytest.raises(LanguageMismatchError):
        fragment_diff(zh, en)


@given(
    st.lists(fragment_text, min_size=1, max_size=6),
    st.lists(fragment_text, min_size=1, max_size=6),
)
def test_diff_bucket_identities(pred_pieces, ref_pieces):
    pred = make_report("p", text="，".join(pred_pieces))
    ref = make_report("q", text="，".join(ref_pieces))
    n_pred = len(segment_report(pred.text))
    n_ref = len(segment_report(ref.text))
    diff = fragment_diff(pred, ref)
    assert len(diff.matched) + len(diff.extra) == n_pred
    assert len(diff.matched) + len(diff.missing) == n_ref
    matched_pred_ids = {id(p) for p, _ in diff.matched}
    assert matched_pred_ids.isdisjoint(id(f) for f in diff.extra)
    matched_ref_indices = {r.index for _, r in diff.matched}
    assert matched_ref_indices.isdisjoint(f.index for f in diff.missing)
