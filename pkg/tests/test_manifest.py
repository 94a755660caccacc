import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rewardzero import (
    Episode,
    Keyframe,
    ManifestParseError,
    ManifestValidationError,
    load_manifest,
    save_manifest,
)
from rewardzero.manifest import (
    count_forward_transitions,
    manifest_document,
    parse_manifest_document,
    unique_frame_refs,
    unique_goal_texts,
)


def make_doc(episodes):
    return {"version": 1, "episodes": episodes}


def episode_doc(task="t", goal="The widget is in place", completions=(0, 33, 66, 100)):
    return {
        "task_name": task,
        "goal_text": goal,
        "keyframes": [
            {"frame_ref": f"{task}/f{pct}", "completion_pct": pct} for pct in completions
        ],
    }


def test_shipped_benchmark_manifest(benchmark_manifest):
    episodes = load_manifest(benchmark_manifest)
    assert len(episodes) == 6
    assert sum(len(ep.keyframes) for ep in episodes) == 24
    assert count_forward_transitions(episodes) == 18
    assert len(unique_goal_texts(episodes)) == 5  # two drawer episodes share a goal
    assert len(unique_frame_refs(episodes)) == 24
    # five distinct environments across six episodes
    assert len({ep.task_name.split("-")[0] for ep in episodes}) == 5


def test_empty_episode_list_rejected():
    with pytest.raises(ManifestValidationError):
        parse_manifest_document(make_doc([]))


def test_non_monotone_completions_rejected():
    doc = make_doc([episode_doc(completions=(0, 66, 33))])
    with pytest.raises(ManifestValidationError) as excinfo:
        parse_manifest_document(doc)
    assert excinfo.value.episode_index == 0
    assert excinfo.value.field == "completion_pct"


def test_first_frame_must_be_zero():
    with pytest.raises(ManifestValidationError):
        parse_manifest_document(make_doc([episode_doc(completions=(10, 50, 100))]))


def test_single_keyframe_rejected():
    with pytest.raises(ManifestValidationError):
        parse_manifest_document(make_doc([episode_doc(completions=(0,))]))


def test_empty_goal_rejected():
    with pytest.raises(ManifestValidationError) as excinfo:
        parse_manifest_document(make_doc([episode_doc(goal="  ")]))
    assert excinfo.value.field == "goal_text"


def test_out_of_range_completion_rejected():
    with pytest.raises(ManifestValidationError):
        parse_manifest_document(make_doc([episode_doc(completions=(0, 101))]))


def test_bad_version_rejected():
    with pytest.raises(ManifestValidationError):
        parse_manifest_document({"version": 7, "episodes": [episode_doc()]})


def test_parse_error_on_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ManifestParseError):
        load_manifest(path)

    with pytest.raises(ManifestParseError):
        load_manifest(tmp_path / "missing.json")


@st.composite
def episodes_strategy(draw):
    n_eps = draw(st.integers(1, 4))
    episodes = []
    for i in range(n_eps):
        n_frames = draw(st.integers(2, 5))
        pcts = sorted(draw(st.sets(st.integers(1, 100), min_size=n_frames - 1,
                                   max_size=n_frames - 1)))
        completions = [0] + pcts
        episodes.append(Episode(
            task_name=f"task-{i}",
            goal_text=f"The part {i} is in its final place",
            keyframes=tuple(
                Keyframe(frame_ref=f"task-{i}/f{p}", completion_pct=p) for p in completions
            ),
        ))
    return episodes


@given(episodes_strategy())
def test_save_load_fixpoint(tmp_path_factory, episodes):
    path = tmp_path_factory.mktemp("manifests") / "m.json"
    save_manifest(episodes, path)
    loaded = load_manifest(path)
    assert loaded == episodes
    # a second save-load round trip is byte-identical
    save_manifest(loaded, path)
    first = path.read_text()
    save_manifest(load_manifest(path), path)
    assert path.read_text() == first


def test_document_round_trip(synthetic_manifest):
    episodes = load_manifest(synthetic_manifest)
    assert parse_manifest_document(manifest_document(episodes)) == episodes


def test_manifest_is_plain_json(synthetic_manifest):
    doc = json.loads(synthetic_manifest.read_text())
    assert set(doc) == {"version", "episodes"}
    for ep in doc["episodes"]:
        assert set(ep) == {"task_name", "goal_text", "keyframes"}
        for kf in ep["keyframes"]:
            assert set(kf) == {"frame_ref", "completion_pct"}
