from __future__ import annotations

import copy

import numpy as np
import pytest

from convosynth.audio import AudioClip
from convosynth.backends.mock import MockBackendSuite
from convosynth.seeds import SeedCatalog
from convosynth.templates import PromptLibrary
from convosynth.types import ScenarioSeed, validate_dialogue, validate_metadata

VALID_METADATA = {
    "settings": {
        "scene_description": "a quiet neighborhood cafe on a rainy afternoon",
        "temporal_context": "present day",
        "spatial_context": "a quiet neighborhood cafe",
        "language": "en",
        "expected_turn_count": 10,
        "expected_duration_seconds": 120.0,
    },
    "character_profiles": [
        {
            "name": "Maya",
            "gender": "female",
            "age": 34,
            "occupation": "engineer",
            "nationality": "United States",
            "personality_traits": ["curious", "direct"],
            "speaking_style": "fast and animated",
            "relationship_to_other": "longtime friend",
        },
        {
            "name": "Omar",
            "gender": "male",
            "age": 41,
            "occupation": "teacher",
            "nationality": "United Kingdom",
            "personality_traits": ["patient", "witty"],
            "speaking_style": "measured and precise",
            "relationship_to_other": "longtime friend",
        },
    ],
    "conversation_context": {
        "topic": "planning a community garden",
        "main_goal": "agree on a plot layout",
        "key_points": ["budget", "volunteer schedule", "tool storage"],
        "emotional_arc": "curious, then animated, then settled",
    },
}

VALID_DIALOGUE = {
    "dialogue_id": "dlg-test-0001",
    "turns": [
        {
            "turn_index": 0,
            "speaker_name": "Maya",
            "text": "Have you seen the empty lot behind the library?",
            "emotion": "curious",
            "speech_rate": "medium",
            "pause_before_seconds": 0.0,
        },
        {
            "turn_index": 1,
            "speaker_name": "Omar",
            "text": "I walk past it every morning, why do you ask?",
            "emotion": "calm",
            "speech_rate": "medium",
            "pause_before_seconds": 0.4,
        },
        {
            "turn_index": 2,
            "speaker_name": "Maya",
            "text": "The council finally approved it for a community garden.",
            "emotion": "excited",
            "speech_rate": "fast",
            "pause_before_seconds": 0.3,
        },
        {
            "turn_index": 3,
            "speaker_name": "Omar",
            "text": "That is wonderful news, when do we start digging?",
            "emotion": "enthusiastic",
            "speech_rate": "medium",
            "pause_before_seconds": 0.6,
        },
    ],
}


@pytest.fixture
def metadata_draft():
    return copy.deepcopy(VALID_METADATA)


@pytest.fixture
def metadata():
    return validate_metadata(copy.deepcopy(VALID_METADATA))


@pytest.fixture
def dialogue_draft():
    return copy.deepcopy(VALID_DIALOGUE)


@pytest.fixture
def dialogue(metadata):
    return validate_dialogue(copy.deepcopy(VALID_DIALOGUE), metadata)


@pytest.fixture
def scenario_seed():
    return ScenarioSeed(
        dialogue_type="casual conversation",
        temporal_context="present day",
        spatial_context="a quiet neighborhood cafe",
        cultural_background="urban professionals in a large coastal city",
        language="en",
        rng_seed=7,
    )


@pytest.fixture
def mock_suite():
    return MockBackendSuite(seed=0)


@pytest.fixture(scope="session")
def catalog():
    return SeedCatalog.load()


@pytest.fixture(scope="session")
def library():
    return PromptLibrary()


def make_clip(duration_seconds: float, sample_rate: int = 16000, seed: int = 0) -> AudioClip:
    rng = np.random.default_rng(seed)
    n = round(duration_seconds * sample_rate)
    return AudioClip(rng.uniform(-0.8, 0.8, n), sample_rate)


@pytest.fixture
def clip_factory():
    return make_clip
