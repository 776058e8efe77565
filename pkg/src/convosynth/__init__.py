"""convosynth: end-to-end synthetic speech-dialogue dataset pipeline.

Structured metadata -> script -> annotated dialogue -> voice-matched
speech, with content and speech quality gates, batch orchestration, and
an inspection HTTP service.
"""

__version__ = "0.1.0"
